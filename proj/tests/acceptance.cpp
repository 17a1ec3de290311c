// Runs every reproduction criterion at full size and prints one line each.
#include <cstdio>
#include <string>

#include "skadapt/reproduce.hpp"

int main(int argc, char** argv) {
  skadapt::reproduce::Options opt;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--quick") opt.quick = true;
  bool all = true;
  skadapt::reproduce::run(opt, {}, [&](const skadapt::reproduce::Criterion& c) {
    std::printf("%s\n", skadapt::reproduce::format_line(c).c_str());
    for (const auto& k : c.checks)
      if (!k.pass) std::printf("    %s FAIL: %s\n", k.id.c_str(), k.detail.c_str());
    std::fflush(stdout);
    all = all && c.pass();
  });
  std::printf("%s\n", all ? "ALL PASS" : "SOME CRITERIA FAILED");
  return all ? 0 : 1;
}
