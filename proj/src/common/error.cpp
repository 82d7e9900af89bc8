#include "malimg/common/error.hpp"

namespace malimg {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MalformedMagic: return "MalformedMagic";
    case Errc::TruncatedHeader: return "TruncatedHeader";
    case Errc::InconsistentOffsets: return "InconsistentOffsets";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::ShapeError: return "ShapeError";
    case Errc::InvalidTarget: return "InvalidTarget";
    case Errc::GraphError: return "GraphError";
    case Errc::NonFinite: return "NonFinite";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::NonFiniteState: return "NonFiniteState";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::DegenerateLabels: return "DegenerateLabels";
    case Errc::EmptyHistory: return "EmptyHistory";
    case Errc::BatchTooSmall: return "BatchTooSmall";
    case Errc::MissingSplit: return "MissingSplit";
    case Errc::EmptyClass: return "EmptyClass";
    case Errc::UnreadableImage: return "UnreadableImage";
    case Errc::ConfigError: return "ConfigError";
    case Errc::ConfigMismatch: return "ConfigMismatch";
    case Errc::DataError: return "DataError";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace malimg
