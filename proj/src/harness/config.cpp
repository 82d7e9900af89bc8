#include "malimg/harness/config.hpp"

#include <algorithm>
#include <fstream>

namespace malimg::harness {

std::string opt_name(OptKind k) { return k == OptKind::AF ? "AF" : "AW"; }
std::string loss_name(LossKind k) { return k == LossKind::CE ? "CE" : "WCE"; }

OptKind parse_opt(const std::string& s) {
  if (s == "AF") return OptKind::AF;
  if (s == "AW") return OptKind::AW;
  fail(Errc::ConfigError, "opt must be AF or AW, got '" + s + "'");
}

LossKind parse_loss(const std::string& s) {
  if (s == "CE") return LossKind::CE;
  if (s == "WCE") return LossKind::WCE;
  fail(Errc::ConfigError, "loss must be CE or WCE, got '" + s + "'");
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const char* where) {
  require(j.is_object(), Errc::ConfigError, std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      fail(Errc::ConfigError, "unknown key '" + key + "' in " + where);
    }
  }
}

void RunConfig::validate() const {
  require(num_classes >= 2, Errc::ConfigError, "num_classes must be >= 2");
  require(in_channels == 1 || in_channels == 3, Errc::ConfigError, "in_channels must be 1 or 3");
  require(image_size >= 32 && image_size % 32 == 0, Errc::ConfigError,
          "image_size must be a positive multiple of 32");
  require(batch_size >= 1, Errc::ConfigError, "batch_size must be >= 1");
  require(!mixup.enabled || batch_size >= 2, Errc::ConfigError,
          "mixup requires batch_size >= 2");
  require(epochs >= 1, Errc::ConfigError, "epochs must be >= 1");
  for (int w : stage_widths) require(w >= 1, Errc::ConfigError, "stage widths must be positive");
  require(fpn_width >= 1, Errc::ConfigError, "fpn_width must be positive");
  optim.validate();
  mixup.validate();
  ta.validate();
}

nlohmann::json RunConfig::to_json() const {
  std::vector<std::string> op_names;
  for (const auto& op : ta.ops) op_names.push_back(op.name);
  return nlohmann::json{
      {"id", id},
      {"data_root", data_root},
      {"num_classes", num_classes},
      {"image_size", image_size},
      {"in_channels", in_channels},
      {"pt", pt},
      {"fpn", fpn},
      {"ta", {{"enabled", ta.enabled}, {"ops", op_names}}},
      {"mixup", {{"enabled", mixup.enabled}, {"alpha", mixup.alpha}}},
      {"opt", opt_name(opt)},
      {"loss", loss_name(loss)},
      {"optim",
       {{"lr", optim.lr},
        {"weight_decay", optim.weight_decay},
        {"warmup_steps", optim.warmup_steps},
        {"beta1", optim.beta1},
        {"beta2", optim.beta2},
        {"eps", optim.eps}}},
      {"batch_size", batch_size},
      {"epochs", epochs},
      {"seed", seed},
      {"stage_widths", stage_widths},
      {"fpn_width", fpn_width},
  };
}

namespace {

// ta.ops entries select by name from the default catalog.
std::vector<aug::TaOp> ops_by_name(const nlohmann::json& names) {
  const auto catalog = aug::TaConfig::default_ops();
  std::vector<aug::TaOp> out;
  for (const auto& n : names) {
    require(n.is_string(), Errc::ConfigError, "ta.ops entries must be strings");
    const std::string name = n.get<std::string>();
    auto it = std::find_if(catalog.begin(), catalog.end(),
                           [&](const aug::TaOp& op) { return op.name == name; });
    require(it != catalog.end(), Errc::ConfigError, "unknown ta op '" + name + "'");
    out.push_back(*it);
  }
  return out;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  check_keys(j,
             {"id", "data_root", "num_classes", "image_size", "in_channels", "pt", "fpn", "ta",
              "mixup", "opt", "loss", "optim", "batch_size", "epochs", "seed", "stage_widths",
              "fpn_width"},
             "config");
  RunConfig c;
  try {
    if (j.contains("id")) c.id = j.at("id").get<std::string>();
    if (j.contains("data_root")) c.data_root = j.at("data_root").get<std::string>();
    require(j.contains("num_classes"), Errc::ConfigError, "config requires num_classes");
    c.num_classes = j.at("num_classes").get<int>();
    if (j.contains("image_size")) c.image_size = j.at("image_size").get<int>();
    if (j.contains("in_channels")) c.in_channels = j.at("in_channels").get<int>();
    if (j.contains("pt") && !j.at("pt").is_null()) c.pt = j.at("pt").get<std::string>();
    if (j.contains("fpn")) c.fpn = j.at("fpn").get<bool>();
    if (j.contains("ta")) {
      const auto& t = j.at("ta");
      check_keys(t, {"enabled", "ops"}, "ta");
      if (t.contains("enabled")) c.ta.enabled = t.at("enabled").get<bool>();
      if (t.contains("ops")) c.ta.ops = ops_by_name(t.at("ops"));
    }
    if (j.contains("mixup")) {
      const auto& m = j.at("mixup");
      check_keys(m, {"enabled", "alpha"}, "mixup");
      if (m.contains("enabled")) c.mixup.enabled = m.at("enabled").get<bool>();
      if (m.contains("alpha")) c.mixup.alpha = m.at("alpha").get<double>();
    }
    if (j.contains("opt")) c.opt = parse_opt(j.at("opt").get<std::string>());
    if (j.contains("loss")) c.loss = parse_loss(j.at("loss").get<std::string>());
    if (j.contains("optim")) {
      const auto& o = j.at("optim");
      check_keys(o, {"lr", "weight_decay", "warmup_steps", "beta1", "beta2", "eps"}, "optim");
      if (o.contains("lr")) c.optim.lr = o.at("lr").get<double>();
      if (o.contains("weight_decay")) c.optim.weight_decay = o.at("weight_decay").get<double>();
      if (o.contains("warmup_steps")) c.optim.warmup_steps = o.at("warmup_steps").get<long>();
      if (o.contains("beta1")) c.optim.beta1 = o.at("beta1").get<double>();
      if (o.contains("beta2")) c.optim.beta2 = o.at("beta2").get<double>();
      if (o.contains("eps")) c.optim.eps = o.at("eps").get<double>();
    }
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
    if (j.contains("stage_widths")) {
      const auto& w = j.at("stage_widths");
      require(w.is_array() && w.size() == 4, Errc::ConfigError, "stage_widths must have 4 entries");
      for (size_t i = 0; i < 4; ++i) c.stage_widths[i] = w.at(i).get<int>();
    }
    if (j.contains("fpn_width")) c.fpn_width = j.at("fpn_width").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ConfigError, std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::IoError, "cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ConfigError, "config " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

nn::ModelConfig RunConfig::model_config() const {
  nn::ModelConfig m;
  m.backbone.in_channels = in_channels;
  m.backbone.stage_widths = stage_widths;
  m.backbone.num_classes = num_classes;
  m.use_fpn = fpn;
  m.fpn.width = fpn_width;
  return m;
}

opt::AdamWHyper RunConfig::adamw_hyper() const {
  opt::AdamWHyper h;
  h.lr = optim.lr;
  h.beta1 = optim.beta1;
  h.beta2 = optim.beta2;
  h.eps = optim.eps;
  h.weight_decay = optim.weight_decay;
  return h;
}

metrics::RunTag RunConfig::tag() const {
  metrics::RunTag t;
  t.id = id;
  t.pt = pt.empty() ? "N" : "Y";
  t.fpn = fpn ? "Y" : "N";
  t.in = std::to_string(in_channels);
  t.ta = ta.enabled ? "Y" : "N";
  t.mu = mixup.enabled ? "Y" : "N";
  t.opt = opt_name(opt);
  t.loss = loss_name(loss);
  return t;
}

}  // namespace malimg::harness
