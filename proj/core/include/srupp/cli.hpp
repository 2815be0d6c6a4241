// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// Command implementations behind the srupp tool.  Each returns a process
// exit code: 0 success, 1 check or compute failure, 2 usage/configuration/
// I/O failure.  Output goes to stdout, diagnostics to stderr.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace srupp {

int cmd_gradcheck(const std::string& config_path, std::uint64_t seed,
                  const std::string& target);

int cmd_train(const std::string& config_path, const std::string& out_dir);

int cmd_eval(const std::string& config_path, const std::string& checkpoint,
             const std::vector<std::int64_t>& lengths);

int cmd_profile(const std::string& config_path, std::int64_t seq_len);

int cmd_attn_dump(const std::string& config_path, const std::string& checkpoint,
                  const std::string& input_csv, std::int64_t layer,
                  const std::string& out_path);

// Comma-separated positive integers; rejects empty or malformed lists.
std::vector<std::int64_t> parse_lengths(const std::string& text);

}  // namespace srupp
