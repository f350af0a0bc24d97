#include "contourseg/errors.hpp"

namespace contourseg {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmptyPointSet: return "EmptyPointSet";
    case ErrorCode::OracleSizeExceeded: return "OracleSizeExceeded";
    case ErrorCode::DegenerateCrop: return "DegenerateCrop";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::EmptySeedSet: return "EmptySeedSet";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::TooSmallTarget: return "TooSmallTarget";
    case ErrorCode::TooFewClicks: return "TooFewClicks";
    case ErrorCode::PredictorTimeout: return "PredictorTimeout";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::DatasetNotFound: return "DatasetNotFound";
    case ErrorCode::CorruptInstance: return "CorruptInstance";
    case ErrorCode::ImageDecode: return "ImageDecode";
    case ErrorCode::ImageTooLarge: return "ImageTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace contourseg
