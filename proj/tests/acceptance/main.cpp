// Runs acceptance criteria by name (all of them without arguments) and
// prints one PASS/FAIL line each.

#include "checks.hpp"

#include <iostream>

int main(int argc, char** argv) {
  using namespace larson::checks;
  std::vector<Result> results;
  if (argc == 1) {
    results = run(true);
  } else {
    for (int i = 1; i < argc; ++i) {
      const std::string name = argv[i];
      bool found = false;
      for (const auto& c : criteria()) {
        if (c.name != name) continue;
        found = true;
        try {
          results.push_back(c.run());
        } catch (const std::exception& e) {
          results.push_back({name, false, std::string("threw: ") + e.what(), 0.0});
        }
      }
      if (!found) {
        std::cerr << "unknown criterion " << name << "\n";
        return 2;
      }
    }
  }
  return report(results, std::cout) ? 0 : 1;
}
