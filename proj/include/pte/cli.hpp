#pragma once

#include <memory>
#include <ostream>

#include "pte/config.hpp"
#include "pte/model_api.hpp"

namespace pte {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,    // bad flags, invalid configuration
  kExitBackend = 3,  // backend failure after retries
  kExitInternal = 4, // broken invariant
};

/// Backends named by the config's backend section.
BackendSuite make_backends(const RunConfig& config);

/// The private dataset named by backend.private_data. Mock sample counts are
/// drawn from the mixture with the run seed.
std::shared_ptr<PrivateDataset> open_private_data(const RunConfig& config);

/// Entry point for the `pte` tool: calibrate, run, evaluate, mockgen.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pte
