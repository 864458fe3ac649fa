#ifndef MUSEV_ERRORS_HPP
#define MUSEV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace musev {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// volume / NIFTI parsing
struct InvalidGeometry : Error { using Error::Error; };
struct BadMagic : Error { using Error::Error; };
struct UnsupportedDatatype : Error { using Error::Error; };
struct UnsupportedDims : Error { using Error::Error; };
struct Truncated : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct RangeOverflow : Error { using Error::Error; };
struct InvalidDtype : Error { using Error::Error; };

// preprocessing
struct InvalidSize : Error { using Error::Error; };
struct SliceCountMismatch : Error { using Error::Error; };

// metrics / analysis
struct GeometryMismatch : Error { using Error::Error; };
struct InvalidThreshold : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct TooFewMaps : Error { using Error::Error; };
struct NonPositiveHeight : Error { using Error::Error; };
struct TooFewPoints : Error { using Error::Error; };
struct ConstantInput : Error { using Error::Error; };
struct AllZeroDifferences : Error { using Error::Error; };

// curation
struct DuplicateSeriesId : Error { using Error::Error; };
struct EmptyCohort : Error { using Error::Error; };
struct InvalidMetadata : Error { using Error::Error; };

// phantom / pipeline
struct InvalidConfig : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct CaseLoadError : Error { using Error::Error; };

}  // namespace musev

#endif
