#ifndef REVERSE_VENDOR_JSON_H_
#define REVERSE_VENDOR_JSON_H_

// Single include point for the vendored nlohmann/json header.
#include "json.hpp"

#endif  // REVERSE_VENDOR_JSON_H_
