#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

namespace mcjudge {

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// SHA-256 over length-prefixed fields, so ("ab","c") and ("a","bc") never collide.
std::string digest_fields(std::initializer_list<std::string_view> fields);

}  // namespace mcjudge
