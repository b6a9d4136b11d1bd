//
// Copyright 2026 The dpcore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Library walkthrough: load a table, run two noisy queries against a budget,
// derive a mean from them and show what the spend means. Sensitive sums
// such as salaries need eps/sensitivity >= 10^-3 or a lowered floor.
//
//   quickstart samples/data/employees.csv samples/data/employees.schema

#include <iostream>
#include <memory>
#include <string>

#include "dpcore/accountant.h"
#include "dpcore/mechanisms.h"
#include "dpcore/plan.h"
#include "dpcore/random_source.h"
#include "dpcore/schema_io.h"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: quickstart CSV SCHEMA\n";
    return 1;
  }
  absl::StatusOr<dpcore::Table> table = dpcore::LoadCsv(argv[1], argv[2]);
  if (!table.ok()) {
    std::cerr << table.status().message() << "\n";
    return 1;
  }

  auto accountant = dpcore::Accountant::Create(
      {{"demo", dpcore::BudgetKind::kPureEpsilon, 1.0, ""}});
  dpcore::RandomSource rng = dpcore::RandomSource::FromOsEntropy();
  dpcore::PrivacyContext ctx{accountant->get(), "demo", &rng, {}};

  // Age is bounded by the schema, so its sum has sensitivity 115.
  auto plan_sum = dpcore::ParsePlan("sum Age\n");
  auto plan_count = dpcore::ParsePlan("count\n");
  dpcore::ExecutionContext exec{&rng, nullptr};
  auto sum = dpcore::ExecutePlan(*table, *plan_sum, exec);
  auto count = dpcore::ExecutePlan(*table, *plan_count, exec);
  if (!sum.ok() || !count.ok()) {
    std::cerr << "plan failed\n";
    return 1;
  }
  std::cout << "sum sensitivity " << sum->l1_sensitivity() << "\n";

  auto noisy_sum = dpcore::LaplaceMechanism(*sum, 0.5, ctx);
  auto noisy_count = dpcore::LaplaceMechanism(*count, 0.5, ctx);
  if (!noisy_sum.ok() || !noisy_count.ok()) {
    std::cerr << "release denied\n";
    return 1;
  }
  std::cout << "noisy mean age "
            << dpcore::DerivedMean(noisy_sum->values()[0],
                                   noisy_count->values()[0])
            << "\n";

  auto status = (*accountant)->Status("demo");
  std::cout << "spent " << status->spent << ", remaining " << status->remaining
            << "\n";
  std::cout << "a test at alpha 0.05 now has power at most "
            << status->power_bound_spent << "\n";

  // The budget is gone: a third release is refused.
  auto third = dpcore::LaplaceMechanism(*count, 0.5, ctx);
  std::cout << "third release: " << third.status().ToString() << "\n";
  return 0;
}
