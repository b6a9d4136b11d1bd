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

#include "dpcore/relational.h"

#include <random>

#include "dpcore/schema_io.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dpcore {
namespace {

using testing::I;
using testing::MakeOrDie;
using testing::TwoColumn;
using testing::ValueOrDie;

Schema OneColumn() {
  return ValueOrDie(Schema::Create({ValueOrDie(ColumnMeta::Integer("x", 0, 9))}));
}

TEST(ColumnMetaTest, RejectsBadDeclarations) {
  EXPECT_FALSE(ColumnMeta::Categorical("c", {}).ok());
  EXPECT_FALSE(ColumnMeta::Integer("n", 5, 4).ok());
  EXPECT_FALSE(ColumnMeta::Real("r", 1.0, 0.0).ok());
  EXPECT_FALSE(Schema::Create({ValueOrDie(ColumnMeta::Integer("a", 0, 1)),
                               ValueOrDie(ColumnMeta::Integer("a", 0, 1))})
                   .ok());
}

TEST(SymmetricDifferenceTest, OneInOneOut) {
  Schema s = OneColumn();
  Table a = MakeOrDie(s, {{I(1)}, {I(2)}});
  Table b = MakeOrDie(s, {{I(2)}, {I(3)}});
  EXPECT_EQ(ValueOrDie(SymmetricDifference(a, b)), 2u);
  EXPECT_EQ(ValueOrDie(SymmetricDifference(a, a)), 0u);
}

TEST(SymmetricDifferenceTest, ReferenceDatabasesTwoAndThree) {
  Schema s = TwoColumn();
  Table db2 = MakeOrDie(s, {{I(0), I(0)}});
  Table db3 = MakeOrDie(s, {{I(100), I(1)}, {I(0), I(0)}});
  EXPECT_EQ(ValueOrDie(SymmetricDifference(db2, db3)), 1u);
}

TEST(SymmetricDifferenceTest, CountsDuplicates) {
  Schema s = OneColumn();
  Table a = MakeOrDie(s, {{I(1)}, {I(1)}, {I(1)}});
  Table b = MakeOrDie(s, {{I(1)}});
  EXPECT_EQ(ValueOrDie(SymmetricDifference(a, b)), 2u);
}

TEST(SymmetricDifferenceTest, SchemaMismatchIsAnError) {
  Table a = MakeOrDie(OneColumn(), {});
  Table b = MakeOrDie(TwoColumn(), {});
  EXPECT_FALSE(SymmetricDifference(a, b).ok());
}

TEST(SymmetricDifferenceTest, IsAMetricOnRandomSmallTables) {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> size(0, 5), value(0, 3);
  Schema s = OneColumn();
  auto random_table = [&] {
    std::vector<Row> rows;
    int n = size(gen);
    for (int i = 0; i < n; ++i) rows.push_back({I(value(gen))});
    return MakeOrDie(s, rows);
  };
  for (int trial = 0; trial < 500; ++trial) {
    Table a = random_table(), b = random_table(), c = random_table();
    std::uint64_t ab = ValueOrDie(SymmetricDifference(a, b));
    std::uint64_t ba = ValueOrDie(SymmetricDifference(b, a));
    std::uint64_t bc = ValueOrDie(SymmetricDifference(b, c));
    std::uint64_t ac = ValueOrDie(SymmetricDifference(a, c));
    EXPECT_EQ(ab, ba);
    EXPECT_LE(ac, ab + bc);
    EXPECT_EQ(ab == 0, internal::SortedRows(a.rows()) ==
                           internal::SortedRows(b.rows()));
  }
}

TEST(EnforceSchemaTest, TopCodesAgeAndLogsOnce) {
  DevLog log;
  Schema s = ValueOrDie(
      Schema::Create({ValueOrDie(ColumnMeta::Integer("age", 0, 115))}));
  Table t = ValueOrDie(MakeTable(s, {{I(120)}}, log));
  EXPECT_EQ(std::get<std::int64_t>(t.rows()[0][0]), 115);
  EXPECT_EQ(log.size(), 1u);
}

TEST(EnforceSchemaTest, InBoundsTableIsUntouched) {
  DevLog log;
  Schema s = TwoColumn();
  Table t = ValueOrDie(MakeTable(s, {{I(3), I(1)}, {I(100), I(0)}}, log));
  EXPECT_EQ(log.size(), 0u);
  Table again = EnforceSchema(t, log);
  EXPECT_EQ(log.size(), 0u);
  EXPECT_EQ(ValueOrDie(SymmetricDifference(t, again)), 0u);
  Table empty = ValueOrDie(MakeTable(s, {}, log));
  EXPECT_TRUE(EnforceSchema(empty, log).empty());
}

TEST(EnforceSchemaTest, CategoricalOutOfDomainMapsToFirstValue) {
  DevLog log;
  Schema s = ValueOrDie(Schema::Create(
      {ValueOrDie(ColumnMeta::Categorical("d", {"flu", "measles", "ebola"}))}));
  Table t = ValueOrDie(MakeTable(s, {{I(-1)}, {I(7)}, {I(2)}}, log));
  EXPECT_EQ(std::get<std::int64_t>(t.rows()[0][0]), 0);
  EXPECT_EQ(std::get<std::int64_t>(t.rows()[1][0]), 0);
  EXPECT_EQ(std::get<std::int64_t>(t.rows()[2][0]), 2);
  EXPECT_EQ(log.size(), 2u);
}

TEST(EnforceSchemaTest, RealColumnsClampAndNaNGoesToLowerBound) {
  DevLog log;
  Schema s = ValueOrDie(
      Schema::Create({ValueOrDie(ColumnMeta::Real("salary", 0, 300000))}));
  Table t = ValueOrDie(
      MakeTable(s, {{Value(-5.0)}, {Value(1e9)}, {Value(std::nan(""))}}, log));
  EXPECT_EQ(std::get<double>(t.rows()[0][0]), 0.0);
  EXPECT_EQ(std::get<double>(t.rows()[1][0]), 300000.0);
  EXPECT_FALSE(std::isnan(std::get<double>(t.rows()[2][0])));
}

TEST(EnforceSchemaTest, Idempotent) {
  DevLog log;
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> v(-50, 200);
  Schema s = TwoColumn();
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Row> rows;
    for (int i = 0; i < 5; ++i) rows.push_back({I(v(gen)), I(v(gen) % 3)});
    Table once = ValueOrDie(MakeTable(s, rows, log));
    Table twice = EnforceSchema(once, log);
    EXPECT_EQ(ValueOrDie(SymmetricDifference(once, twice)), 0u);
  }
}

TEST(MakeTableTest, ReferenceDatabasesHaveStabilityOne) {
  Schema s = TwoColumn();
  Table db1 = MakeOrDie(s, {});
  Table db2 = MakeOrDie(s, {{I(0), I(0)}});
  EXPECT_TRUE(db1.empty());
  EXPECT_EQ(db1.stability(), StabilityBound::Identity());
  EXPECT_EQ(db2.size(), 1u);
  EXPECT_EQ(db2.stability(), StabilityBound::Identity());
}

TEST(MakeTableTest, WrongArityIsAnError) {
  EXPECT_FALSE(MakeTable(TwoColumn(), {{I(1)}}).ok());
}

TEST(MakeTableTest, MixedNumericCellsAreNormalized) {
  Schema s = ValueOrDie(Schema::Create({ValueOrDie(ColumnMeta::Real("r", 0, 1)),
                                        ValueOrDie(ColumnMeta::Integer("n", 0, 5))}));
  Table t = MakeOrDie(s, {{I(1), I(2)}});
  EXPECT_TRUE(std::holds_alternative<double>(t.rows()[0][0]));
  EXPECT_TRUE(std::holds_alternative<std::int64_t>(t.rows()[0][1]));
  EXPECT_FALSE(MakeTable(s, {{I(1), Value(2.0)}}).ok());
}

TEST(StatVectorTest, RejectsBadSensitivity) {
  EXPECT_FALSE(StatVector::Create({1.0}, -1).ok());
  EXPECT_FALSE(StatVector::Create({1.0}, INFINITY).ok());
  EXPECT_FALSE(StatVector::Create({1.0}, 1, {"a", "b"}).ok());
  StatVector v = ValueOrDie(StatVector::Create({1.0, 2.0}, 3));
  EXPECT_EQ(v.labels(), (std::vector<std::string>{"0", "1"}));
}

TEST(StabilityBoundTest, Arithmetic) {
  StabilityBound one = StabilityBound::Identity();
  StabilityBound s = one;
  for (int i = 0; i < 5; ++i) s = s + s;
  EXPECT_EQ(s.AsDouble(), 32.0);
  EXPECT_TRUE((s + StabilityBound::Infinite()).is_infinite());
}

TEST(SchemaIoTest, ParsesSidecarAndCsv) {
  Schema s = ValueOrDie(ParseSchema(
      "# comment\nage integer 18 65\nsalary real 0 300000\n"
      "disease categorical flu,measles,ebola\n"));
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(FormatSchema(s), FormatSchema(ValueOrDie(ParseSchema(FormatSchema(s)))));
  DevLog log;
  Table t = ValueOrDie(ParseCsv(
      "age,salary,disease\n30,1000.5,flu\n70,5,\"ebola\"\n", s, log));
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(log.size(), 1u);  // age 70 top-coded
  Table round = ValueOrDie(ParseCsv(FormatCsv(t), s, log));
  EXPECT_EQ(ValueOrDie(SymmetricDifference(t, round)), 0u);
}

TEST(SchemaIoTest, CsvErrorsNameTheLineNotTheValue) {
  Schema s = ValueOrDie(ParseSchema("age integer 0 115\n"));
  absl::StatusOr<Table> t = ParseCsv("age\n12\nsecret-value\n", s);
  ASSERT_FALSE(t.ok());
  std::string message(t.status().message());
  EXPECT_NE(message.find("line 3"), std::string::npos);
  EXPECT_EQ(message.find("secret-value"), std::string::npos);
  EXPECT_FALSE(ParseCsv("wrong\n1\n", s).ok());
  EXPECT_FALSE(ParseSchema("").ok());
  EXPECT_FALSE(ParseSchema("x real 0\n").ok());
}

// Output metadata never depends on row values.
TEST(MetadataTest, ReplacingValuesLeavesMetadataIdentical) {
  Schema s = TwoColumn();
  Table a = MakeOrDie(s, {{I(1), I(0)}, {I(2), I(1)}});
  Table b = MakeOrDie(s, {{I(99), I(1)}, {I(0), I(0)}});
  EXPECT_EQ(FormatSchema(EnforceSchema(a).schema()),
            FormatSchema(EnforceSchema(b).schema()));
  EXPECT_EQ(a.stability(), b.stability());
}

}  // namespace
}  // namespace dpcore
