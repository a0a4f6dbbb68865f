/**
 * @file cli.hpp
 * @brief Entry point of the `stmimo_cli` tool (simulate / estimate / benchmark).
 *
 * Exit codes: 0 success, 1 usage or config error, 2 runtime failure.
 */
#pragma once

namespace stmimo {

int cli_main(int argc, char** argv);

}  // namespace stmimo
