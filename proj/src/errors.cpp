#include "bbis/errors.hpp"

namespace bbis {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Schema: return "schema";
    case ErrorCode::Dimension: return "dimension";
    case ErrorCode::Invalid: return "invalid";
    case ErrorCode::Estimation: return "estimation";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace bbis
