#pragma once

#include <string>
#include <string_view>

namespace srprom::cli {

/// Entry point behind the `srprom` executable. Returns the process exit
/// status: 0 success, 1 validation or usage error, 2 I/O error.
int run_cli(int argc, char** argv);

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

const char* version();

}  // namespace srprom::cli
