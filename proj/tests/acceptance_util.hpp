#pragma once

// Shared harness for the acceptance suite: every criterion prints one
// PASS/FAIL line; the binary exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

struct Criterion {
  int id;
  std::string name;
  std::function<void(std::vector<std::string>&)> body;
};

class Harness {
public:
  void add(int id, std::string name,
           std::function<void(std::vector<std::string>&)> body) {
    items_.push_back({id, std::move(name), std::move(body)});
  }

  // fails the current criterion with a message when cond is false
  static void require(bool cond, const std::string& msg,
                      std::vector<std::string>& failures) {
    if (!cond) failures.push_back(msg);
  }

  int run(int argc, char** argv) {
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    int failed = 0;
    for (auto& c : items_) {
      if (!only.empty() &&
          std::find(only.begin(), only.end(), c.id) == only.end())
        continue;
      std::vector<std::string> failures;
      auto start = std::chrono::steady_clock::now();
      try {
        c.body(failures);
      } catch (const std::exception& e) {
        failures.push_back(std::string("exception: ") + e.what());
      }
      double secs = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
      if (failures.empty()) {
        std::printf("[PASS] criterion %2d: %s (%.1fs)\n", c.id, c.name.c_str(),
                    secs);
      } else {
        ++failed;
        std::printf("[FAIL] criterion %2d: %s (%.1fs)\n", c.id, c.name.c_str(),
                    secs);
        for (const auto& f : failures) std::printf("       - %s\n", f.c_str());
      }
      std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
  }

private:
  std::vector<Criterion> items_;
};
