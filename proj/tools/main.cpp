// ffscale command line: scenario runs plus golden-file regression.
//
//   ffscale --scenario two-level --alpha-bar 2 --t0 10 --out results/
//   ffscale regress <golden_dir> <fresh_dir> [--tol 1e-9]

#include "ffscale/cli.hpp"
#include "ffscale/errors.hpp"

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (!args.empty() && args[0] == "regress") {
            std::string golden, fresh;
            double tol = 1e-9;
            std::vector<std::string> rest(args.begin() + 1, args.end());
            std::vector<std::string> positional;
            for (std::size_t i = 0; i < rest.size(); ++i) {
                if (rest[i] == "--tol") {
                    if (i + 1 >= rest.size()) throw ffscale::UsageError("--tol needs a value");
                    tol = std::stod(rest[++i]);
                } else {
                    positional.push_back(rest[i]);
                }
            }
            if (positional.size() != 2) {
                throw ffscale::UsageError("usage: ffscale regress <golden_dir> <fresh_dir> [--tol x]");
            }
            return ffscale::regress(positional[0], positional[1], tol, std::cout);
        }
        const ffscale::RunConfig cfg = ffscale::parse_config(args);
        const int code = ffscale::execute(cfg);
        std::cout << "scenario " << cfg.scenario << " -> " << cfg.output_dir
                  << " (exit " << code << ")\n";
        return code;
    } catch (const ffscale::HelpRequested&) {
        return 0;
    } catch (const ffscale::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return ffscale::kExitUsage;
    } catch (const ffscale::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return ffscale::kExitNoInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
