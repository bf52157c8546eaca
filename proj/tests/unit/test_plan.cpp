#include <random>

#include "astmon/plan.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace astmon;

TEST_CASE("bundled Table 1 plan") {
  const auto plan = testsupport::table1_plan();
  const std::vector<Exercise> expected{
      {1, 150, 60}, {2, 170, 120}, {3, 145, 120}, {4, 180, 60}, {5, 182, 60}};
  CHECK(plan->exercises() == expected);
  CHECK(plan->max_id() == 5);
  CHECK(plan->total_duration_s() == 420);
}

TEST_CASE("single exercise plan") {
  const auto plan =
      parse_plan(R"({"name":"one","exercises":[{"id":1,"target_hr":150,"duration_min":1}]})");
  CHECK(plan.max_id() == 1);
  CHECK(plan.exercise(1) == Exercise{1, 150, 60});
  CHECK_THROWS_AS(plan.exercise(2), std::out_of_range);
}

TEST_CASE("gapped ids are rejected") {
  try {
    parse_plan(R"({"name":"gap","exercises":[
      {"id":1,"target_hr":150,"duration_min":1},
      {"id":3,"target_hr":150,"duration_min":1}]})");
    FAIL("accepted gapped ids");
  } catch (const PlanError& e) {
    CHECK(std::string(e.what()).find("gapped ids") != std::string::npos);
  }
}

TEST_CASE("invalid documents") {
  const char* bad[] = {
      "",
      "[]",
      R"({"name":"x","exercises":[]})",
      R"({"name":"x","exercises":[{"id":1,"target_hr":29,"duration_min":1}]})",
      R"({"name":"x","exercises":[{"id":1,"target_hr":231,"duration_min":1}]})",
      R"({"name":"x","exercises":[{"id":1,"target_hr":150,"duration_min":0}]})",
      R"({"name":"x","exercises":[{"id":1,"target_hr":150,"duration_min":-1}]})",
      R"({"name":"x","exercises":[{"id":0,"target_hr":150,"duration_min":1}]})",
      R"({"name":"x","exercises":[{"id":1,"target_hr":"150","duration_min":1}]})",
      R"({"name":"x","exercises":[{"id":1,"target_hr":150}]})",
      R"({"name":"x","exercises":[{"id":1,"target_hr":150,"duration_min":1,"pace":3}]})",
      R"({"name":"x","exercises":[{"id":1,"target_hr":150,"duration_min":1},
                                 {"id":1,"target_hr":150,"duration_min":1}]})",
      R"({"name":"x","exercises":[{"id":2,"target_hr":150,"duration_min":1},
                                 {"id":1,"target_hr":150,"duration_min":1}]})",
  };
  for (const char* doc : bad) {
    CAPTURE(doc);
    CHECK_THROWS_AS(parse_plan(doc), PlanError);
  }
}

TEST_CASE("error path names the field") {
  try {
    parse_plan(R"({"name":"x","exercises":[{"id":1,"target_hr":150,"duration_min":1},
                                            {"id":2,"target_hr":400,"duration_min":1}]})");
    FAIL("accepted");
  } catch (const PlanError& e) {
    CHECK(e.path() == "exercises[1].target_hr");
  }
}

TEST_CASE("minutes to seconds") {
  CHECK(minutes_to_seconds(1) == 60);
  CHECK(minutes_to_seconds(2) == 120);
  CHECK(minutes_to_seconds(0.5) == 30);
  CHECK(minutes_to_seconds(1.0 / 60.0) == 1);
}

TEST_CASE("round trip") {
  const auto table1 = testsupport::table1_plan();
  CHECK(parse_plan(serialize_plan(*table1)) == *table1);

  const TrainingPlan minimal("m", {{1, 150, 60}});
  CHECK(parse_plan(serialize_plan(minimal)) == minimal);

  // sub-minute durations survive too
  const TrainingPlan odd("odd", {{1, 100, 1}, {2, 120, 59}, {3, 140, 61}});
  CHECK(parse_plan(serialize_plan(odd)) == odd);

  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto plan = testsupport::random_plan(rng, 20, 3600);
    const auto again = parse_plan(serialize_plan(plan));
    REQUIRE(again == plan);
  }
}

TEST_CASE("fuzzed documents never crash") {
  const std::string base = serialize_plan(*testsupport::table1_plan());
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pos(0, base.size() - 1);
  std::uniform_int_distribution<int> byte(0, 255);
  int accepted = 0;
  for (int i = 0; i < 5000; ++i) {
    std::string doc = base;
    for (int k = 0; k < 3; ++k) doc[pos(rng)] = static_cast<char>(byte(rng));
    try {
      const auto plan = parse_plan(doc);
      // anything accepted still satisfies the invariants
      for (int id = 1; id <= plan.max_id(); ++id) {
        const auto& e = plan.exercise(id);
        CHECK(e.id == id);
        CHECK(e.target_hr >= kMinTargetHr);
        CHECK(e.target_hr <= kMaxTargetHr);
        CHECK(e.duration_s >= 1);
      }
      ++accepted;
    } catch (const PlanError&) {
    }
  }
  MESSAGE(accepted << " of 5000 mutated documents were still valid plans");
}
