#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace audit::cli {

// Shared command options. Exit codes: 0 = audit completed (whatever the
// decision; the decision lives in the report, not the exit code), 1 = audit
// refused (insufficient evidence / no usable records), 2 = configuration or
// transport error.
struct CommonOptions {
    std::string out_dir = ".";
    std::string format = "json,markdown,csv";  // which artifacts to write
    std::optional<std::uint64_t> seed_override;
    std::optional<int> workers_override;
    bool strict = true;
};

int cmd_run(const std::string& config_path, const CommonOptions& options);
int cmd_power(const std::string& config_path, const CommonOptions& options);
int cmd_ll144(const std::string& data_path, const std::string& config_path,
              const CommonOptions& options);
// Synthetic-zoo calibration suite with built-in defaults.
int cmd_simulate(const CommonOptions& options, std::size_t trials);

bool format_enabled(const CommonOptions& options, const std::string& name);

}  // namespace audit::cli
