#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <map>
#include <string>

namespace {

struct Criterion {
  int id;
  const char* title;
  std::array<const char*, 4> suites;
};

constexpr std::array<Criterion, 9> kCriteria{{
    {1, "parameter parity", {"ParameterParity"}},
    {2, "gradient correctness", {"GradientCorrectness"}},
    {3, "sampler fidelity", {"SamplerFidelity"}},
    {4, "lloyd relaxation", {"LloydRelaxation"}},
    {5, "encoding benchmark ordering", {"EncodingOrdering"}},
    {6, "sphere drape", {"SphereDrape"}},
    {7, "adaptive vs uniform", {"AdaptiveVersusUniform"}},
    {8, "free variable contrast", {"FreeVariableContrast"}},
    {9, "analytic loss examples", {"RestAtlasExamples", "LocalStructureExamples", "LossExamples", "SamplerExamples"}},
}};

/// Collects per-suite outcomes so each criterion gets one summary line.
class CriterionListener : public ::testing::EmptyTestEventListener {
 public:
  void OnTestEnd(const ::testing::TestInfo& info) override {
    // Parameterized suites are reported as "Instance/Suite".
    std::string suite = info.test_suite_name();
    if (const auto slash = suite.rfind('/'); slash != std::string::npos) suite.erase(0, slash + 1);
    auto& s = suites_[suite];
    ++s.run;
    if (info.result()->Failed()) ++s.failed;
  }

  void OnTestProgramEnd(const ::testing::UnitTest&) override {
    std::printf("\n==== acceptance summary ====\n");
    for (const auto& c : kCriteria) {
      int run = 0, failed = 0;
      for (const char* name : c.suites) {
        if (!name) continue;
        auto it = suites_.find(name);
        if (it == suites_.end()) continue;
        run += it->second.run;
        failed += it->second.failed;
      }
      const char* verdict = run == 0 ? "NOT RUN" : failed ? "FAIL" : "PASS";
      std::printf("criterion %d (%s): %s  [%d tests, %d failed]\n", c.id, c.title, verdict, run, failed);
    }
    std::fflush(stdout);
  }

 private:
  struct Counts {
    int run = 0;
    int failed = 0;
  };
  std::map<std::string, Counts> suites_;
};

}  // namespace

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  ::testing::UnitTest::GetInstance()->listeners().Append(new CriterionListener);
  return RUN_ALL_TESTS();
}
