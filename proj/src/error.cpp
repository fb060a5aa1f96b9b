#include "icsdet/error.hpp"

namespace icsdet {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingSection: return "MissingSection";
        case ErrorCode::ArityMismatch: return "ArityMismatch";
        case ErrorCode::UnparseableNumeric: return "UnparseableNumeric";
        case ErrorCode::UnsupportedAttribute: return "UnsupportedAttribute";
        case ErrorCode::MissingValue: return "MissingValue";
        case ErrorCode::UnknownNominal: return "UnknownNominal";
        case ErrorCode::MissingLabelColumn: return "MissingLabelColumn";
        case ErrorCode::NonBinaryLabel: return "NonBinaryLabel";
        case ErrorCode::EmptyTable: return "EmptyTable";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::SingleClassDataset: return "SingleClassDataset";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidF: return "InvalidF";
        case ErrorCode::OverlappingEpisodes: return "OverlappingEpisodes";
        case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::StaleCache: return "StaleCache";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::InvalidWeights: return "InvalidWeights";
        case ErrorCode::EmptyNode: return "EmptyNode";
        case ErrorCode::WidthMismatch: return "WidthMismatch";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::Empty: return "Empty";
        case ErrorCode::ConfigParse: return "ConfigParse";
        case ErrorCode::FileNotFound: return "FileNotFound";
        case ErrorCode::Io: return "Io";
        case ErrorCode::BadModelFile: return "BadModelFile";
    }
    return "Unknown";
}

}  // namespace icsdet
