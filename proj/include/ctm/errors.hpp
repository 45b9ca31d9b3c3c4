#pragma once

#include <stdexcept>
#include <string>

namespace ctm {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// file system / word list loading
struct FileError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// serialized data
struct FormatError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };

// corpus pipeline
struct EmptyVocabulary : Error { using Error::Error; };

// numerics
struct InvalidDimensions : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct SingularSigma : Error { using Error::Error; };
struct DegenerateRow : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };

// coherence
struct UndefinedMarginal : Error { using Error::Error; };
struct AllPairsSkipped : Error { using Error::Error; };
struct EmptyReference : Error { using Error::Error; };

}  // namespace ctm
