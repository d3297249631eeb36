#ifndef DCCI_CLI_HPP
#define DCCI_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace dcci::cli {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

/// Entry point of the `dcci` tool. Subcommands: gen, train, spectrum, infer,
/// classify, gradcheck, oracle, verify. Every command writes
/// <out>/<command>_metrics.json, its CSV artifacts and <out>/manifest.json.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience for tests: argv[0] is supplied.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dcci::cli

#endif  // DCCI_CLI_HPP
