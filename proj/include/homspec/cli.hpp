#pragma once

// Command-line front end: model | simulate | fit | beat | compare.
// run() is the whole program minus process glue, so tests can invoke
// commands in-process and the binary stays a thin wrapper.
//
// Exit codes: 0 success, 1 usage, 2 data/schema, 3 numerical failure.

#include <string>
#include <vector>

namespace homspec::cli {

int run(const std::vector<std::string>& args);

}  // namespace homspec::cli
