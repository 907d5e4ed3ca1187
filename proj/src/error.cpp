#include "veilmod/error.hpp"

namespace veilmod {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid_parameter";
    case ErrorKind::invalid_image: return "invalid_image";
    case ErrorKind::invalid_pair: return "invalid_pair";
    case ErrorKind::out_of_bounds: return "out_of_bounds";
    case ErrorKind::io: return "io";
    case ErrorKind::schema: return "schema";
    case ErrorKind::validation: return "validation";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::state: return "state";
    case ErrorKind::unauthorized: return "unauthorized";
    case ErrorKind::forbidden: return "forbidden";
    case ErrorKind::expired: return "expired";
    case ErrorKind::too_large: return "too_large";
    }
    return "unknown";
}

} // namespace veilmod
