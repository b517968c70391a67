// End-to-end recovery through the command line: simulate then fit with a
// block bootstrap, 20 seeds, stationary kernel, S=50, m=100. Passes when the
// generating beta1 lies inside the bootstrap interval for at least 80% of seeds.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

int run_cli(const std::string& command, const fs::path& config, const fs::path& out) {
  const std::string cmd = std::string("\"") + NSMAXSTAB_CLI + "\" " + command + " --config \"" + config.string() +
                          "\" --out \"" + out.string() + "\" > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json load(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

int main() {
  constexpr double kBeta1 = 0.2;
  constexpr int kSeeds = 20;
  const fs::path root = fs::temp_directory_path() / "nsmaxstab_cli_recovery";
  fs::remove_all(root);
  const auto t0 = std::chrono::steady_clock::now();

  int covered = 0, failed = 0;
  std::string detail;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const fs::path dir = root / ("seed" + std::to_string(seed));
    fs::create_directories(dir);
    const json cfg{
        {"seed", seed},
        {"sites", {{"random", {{"count", 50}, {"seed", 100 + seed}}}}},
        {"data", {{"stations", (dir / "sim/stations.csv").string()}, {"maxima", (dir / "sim/maxima.csv").string()}}},
        {"model",
         {{"name", "stationary"},
          {"kernel", "parametric"},
          {"parameters", {{"beta1", kBeta1}, {"beta2", 0.0}, {"alpha", 1.0}}},
          {"fixed", {"beta2"}}}},
        {"simulate", {{"replicates", 100}}},
        {"pairs", {{"policy", "closest"}, {"fraction", 0.1}}},
        {"fit", {{"restarts", 0}, {"sandwich", false}, {"bootstrap", 50}}}};
    std::ofstream(dir / "config.json") << cfg.dump(2);
    if (run_cli("simulate", dir / "config.json", dir / "sim") != 0 ||
        run_cli("fit", dir / "config.json", dir / "fit") != 0) {
      ++failed;
      continue;
    }
    const json fit = load(dir / "fit/fit.json");
    const auto& ci = fit["bootstrap"]["intervals"]["beta1"];
    if (!ci[0].is_number() || !ci[1].is_number()) {
      ++failed;
      continue;
    }
    const double lo = ci[0].get<double>(), hi = ci[1].get<double>();
    const bool in = lo <= kBeta1 && kBeta1 <= hi;
    covered += in;
    char line[128];
    std::snprintf(line, sizeof line, "        seed %2d: [%.4f, %.4f]%s\n", seed, lo, hi, in ? "" : "  (misses)");
    detail += line;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = covered >= (kSeeds * 4) / 5;
  std::printf("%s  cli recovery: beta1 inside bootstrap interval in %d of %d seeds, %d runs failed (%.1f s)\n",
              pass ? "PASS" : "FAIL", covered, kSeeds, failed, secs);
  std::cout << detail;
  return pass ? 0 : 1;
}
