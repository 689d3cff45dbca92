// Acceptance suite: runs every quantitative criterion at its stated
// tolerance and prints one pass/fail line per criterion. Exit code 0 iff all
// criteria pass.
#include <algorithm>
#include <cstdio>

#include "steinq/acceptance.hpp"

int main() {
  using namespace steinq::acceptance;
  const auto results = runMany(suiteCriteria("all"));
  bool all = true;
  double total = 0;
  for (const auto& r : results) {
    std::printf("[%s] %02d %-28s (%6.2f s)  %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                r.seconds, r.detail.c_str());
    all = all && r.pass;
    total += r.seconds;
  }
  std::printf("%s: %zu/%zu criteria passed in %.1f s\n", all ? "OK" : "FAILURE",
              static_cast<std::size_t>(std::count_if(results.begin(), results.end(),
                                                     [](const auto& r) { return r.pass; })),
              results.size(), total);
  return all ? 0 : 1;
}
