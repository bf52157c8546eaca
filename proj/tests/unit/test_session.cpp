#include <cmath>
#include <numeric>
#include <random>

#include "astmon/session.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace astmon;
using testsupport::Press;
using testsupport::Second;

namespace {

SensorSample hr(int bpm) {
  SensorSample s;
  s.hr_bpm = bpm;
  return s;
}

std::shared_ptr<const TrainingPlan> one_minute() {
  return std::make_shared<const TrainingPlan>("one", std::vector<Exercise>{{1, 150, 60}});
}

}  // namespace

TEST_CASE("running mean") {
  const auto first = update_mean(0, 0, 150);
  CHECK(first.mean == 150.0);
  CHECK(first.n == 1);

  MeanUpdate m;
  for (int v : {150, 160, 170}) m = update_mean(m.mean, m.n, v);
  CHECK(m.mean == doctest::Approx(160.0));
  CHECK(m.n == 3);
}

TEST_CASE("running mean against sum/count") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> bpm(30, 230);
  MeanUpdate m;
  long sum = 0;
  for (int i = 1; i <= 10000; ++i) {
    const int v = bpm(rng);
    sum += v;
    m = update_mean(m.mean, m.n, v);
    const double oracle = double(sum) / i;
    REQUIRE(std::abs(m.mean - oracle) <= 1e-9 * oracle);
  }
}

TEST_CASE("classification boundaries") {
  CHECK(classify(150, 150, 5) == FeedbackStatus{Feedback::kOnTrack, false});
  CHECK(classify(144.9, 150, 5) == FeedbackStatus{Feedback::kBelow, true});
  CHECK(classify(156, 150, 5) == FeedbackStatus{Feedback::kAbove, false});
  CHECK(classify(145, 150, 5).level == Feedback::kOnTrack);
  CHECK(classify(155, 150, 5).level == Feedback::kOnTrack);
  CHECK(classify(155.0001, 150, 5).level == Feedback::kAbove);
  CHECK(symbol(Feedback::kBelow) == "-");
  CHECK(symbol(Feedback::kOnTrack) == "=");
  CHECK(symbol(Feedback::kAbove) == "+");
}

TEST_CASE("buttons") {
  SessionEngine e(testsupport::table1_plan());
  CHECK(e.handle_command(CommandAction::kStopInterval).accepted == false);
  CHECK(e.phase() == Phase::kIdle);
  CHECK(e.ignored_commands() == 1);

  CHECK(e.handle_command(CommandAction::kStartTracking).accepted);
  CHECK(e.phase() == Phase::kTracking);

  // ride to exercise 5 and give up half way
  for (int id = 1; id <= 4; ++id) {
    REQUIRE(e.handle_command(CommandAction::kStartInterval).accepted);
    for (int s = 0; s < e.plan().exercise(id).duration_s; ++s) e.tick(hr(150));
    REQUIRE(e.phase() == Phase::kRest);
  }
  REQUIRE(e.handle_command(CommandAction::kStartInterval).accepted);
  for (int s = 0; s < 20; ++s) e.tick(hr(170));
  const auto out = e.handle_command(CommandAction::kStopInterval);
  CHECK(out.accepted);
  REQUIRE(out.record);
  CHECK_FALSE(out.record->completed);
  CHECK(out.record->elapsed_s == 20);
  CHECK(out.record->exercise_id == 5);
  CHECK(e.phase() == Phase::kRest);
  CHECK_FALSE(e.interval());
  // no exercise left to start
  CHECK_FALSE(e.handle_command(CommandAction::kStartInterval).accepted);
  // ticks in rest carry no interval timer
  const auto t = e.tick(hr(120));
  REQUIRE(t);
  CHECK_FALSE(t->frame.remaining_s);
  CHECK_FALSE(t->frame.interval_id);
}

TEST_CASE("constant heart rate completes the interval on target") {
  SessionEngine e(one_minute());
  e.handle_command(CommandAction::kStartTracking);
  e.handle_command(CommandAction::kStartInterval);
  std::optional<IntervalRecord> rec;
  for (int s = 1; s <= 60; ++s) {
    auto t = e.tick(hr(150));
    REQUIRE(t);
    CHECK(t->frame.remaining_s == 60 - s);
    CHECK(t->frame.feedback == Feedback::kOnTrack);
    if (t->record) rec = t->record;
  }
  REQUIRE(rec);
  CHECK(rec->completed);
  CHECK(rec->achieved_avg_hr == 150.0);
  CHECK(rec->deviation_bpm == 0.0);
  CHECK(rec->samples_n == 60);
  CHECK(e.phase() == Phase::kFinished);
  CHECK_FALSE(e.tick(hr(150)));
}

TEST_CASE("no heart rate at all") {
  SessionEngine e(one_minute());
  e.handle_command(CommandAction::kStartTracking);
  e.handle_command(CommandAction::kStartInterval);
  std::optional<IntervalRecord> rec;
  for (int s = 1; s <= 60; ++s) {
    auto t = e.tick(SensorSample{});
    REQUIRE(t);
    CHECK_FALSE(t->frame.avg_hr);
    CHECK_FALSE(t->frame.feedback);
    CHECK_FALSE(t->frame.alert);
    if (t->record) rec = t->record;
  }
  REQUIRE(rec);
  CHECK(rec->completed);
  CHECK(rec->samples_n == 0);
  CHECK_FALSE(rec->achieved_avg_hr);
  CHECK_FALSE(rec->deviation_bpm);
}

TEST_CASE("below plan raises the alert") {
  SessionEngine e(one_minute());
  e.handle_command(CommandAction::kStartTracking);
  e.handle_command(CommandAction::kStartInterval);
  auto t = e.tick(hr(140));
  CHECK(t->frame.feedback == Feedback::kBelow);
  CHECK(t->frame.alert);
  t = e.tick(hr(170));  // mean 155
  CHECK(t->frame.feedback == Feedback::kOnTrack);
  CHECK_FALSE(t->frame.alert);
}

TEST_CASE("last-sample reading of the mean differs") {
  EngineOptions literal;
  literal.mean_rule = MeanRule::kLastSampleOnly;
  SessionEngine a(one_minute());
  SessionEngine b(one_minute(), literal);
  for (auto* e : {&a, &b}) {
    e->handle_command(CommandAction::kStartTracking);
    e->handle_command(CommandAction::kStartInterval);
  }
  std::optional<TickOutcome> ta, tb;
  for (int v : {150, 160, 170}) {
    ta = a.tick(hr(v));
    tb = b.tick(hr(v));
  }
  CHECK(ta->frame.avg_hr == doctest::Approx(160.0));
  CHECK(tb->frame.avg_hr == 170.0);
}

TEST_CASE("poweroff closes a running interval") {
  SessionEngine e(one_minute());
  e.handle_command(CommandAction::kStartTracking);
  e.handle_command(CommandAction::kStartInterval);
  e.tick(hr(150));
  const auto out = e.handle_command(CommandAction::kPoweroff);
  CHECK(out.shutdown);
  REQUIRE(out.record);
  CHECK_FALSE(out.record->completed);
  CHECK_FALSE(e.tick(hr(150)));
  CHECK_FALSE(e.handle_command(CommandAction::kStartTracking).accepted);
}

TEST_CASE("random command streams only make legal transitions") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> action(0, 4);
  std::uniform_int_distribution<int> pct(0, 99);
  for (int round = 0; round < 500; ++round) {
    const auto plan = std::make_shared<const TrainingPlan>(testsupport::random_plan(rng, 4, 20));
    SessionEngine e(plan);
    for (int i = 0; i < 300; ++i) {
      if (pct(rng) < 30) {
        e.handle_command(static_cast<CommandAction>(action(rng)));
      } else {
        e.tick(hr(140));
      }
      if (e.interval()) {
        REQUIRE(e.interval()->remaining_s() >= 0);
        REQUIRE(e.interval()->remaining_s() <= e.interval()->duration_s);
      }
    }
    for (const auto& [from, to] : e.transitions()) REQUIRE(is_legal_transition(from, to));
    for (const auto& r : e.records()) {
      REQUIRE(r.elapsed_s <= r.duration_s);
      REQUIRE(r.completed == (r.elapsed_s == r.duration_s));
    }
  }
}

TEST_CASE("Table 1 ridden through conserves 420 s") {
  const auto plan = testsupport::table1_plan();
  const auto script =
      testsupport::full_session_script(*plan, 30, [](int target) { return target + 1; });
  const auto records = testsupport::engine_records(plan, script);
  REQUIRE(records.size() == 5);
  int total = 0;
  for (const auto& r : records) {
    CHECK(r.completed);
    CHECK(*r.deviation_bpm == 1.0);
    total += r.elapsed_s;
  }
  CHECK(total == 420);
}

TEST_CASE("engine equals the reference interpreter") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 200; ++i) {
    const auto plan = std::make_shared<const TrainingPlan>(testsupport::random_plan(rng));
    const auto script = testsupport::random_script(rng, *plan);
    std::string why;
    INFO("triple " << i);
    REQUIRE(testsupport::same_records(testsupport::engine_records(plan, script),
                                      testsupport::reference_records(*plan, script), &why));
  }
  // and on Table 1 with a scripted trace
  const auto table1 = testsupport::table1_plan();
  const auto script = testsupport::full_session_script(*table1, 45, [](int t) { return t - 3; });
  CHECK(testsupport::same_records(testsupport::engine_records(table1, script),
                                  testsupport::reference_records(*table1, script)));
}

TEST_CASE("same inputs, same frames") {
  std::mt19937_64 rng(4);
  const auto plan = std::make_shared<const TrainingPlan>(testsupport::random_plan(rng));
  const auto script = testsupport::random_script(rng, *plan);
  auto frames = [&] {
    SessionEngine e(plan);
    std::vector<TelemetryFrame> out;
    for (const auto& step : script) {
      if (const auto* p = std::get_if<Press>(&step)) {
        e.handle_command(p->action);
      } else if (auto t = e.tick(SensorSample{0, std::get<Second>(step).hr, std::nullopt})) {
        out.push_back(t->frame);
      }
    }
    return out;
  };
  CHECK(frames() == frames());
}

TEST_CASE("record json round trip") {
  IntervalRecord r{3, 147.25, 145, 120, 120, true, 118, 2.25, 1234.5};
  CHECK(record_from_json(record_to_json(r)) == r);
  IntervalRecord empty{1, std::nullopt, 150, 10, 60, false, 0, std::nullopt, 0.0};
  CHECK(record_from_json(record_to_json(empty)) == empty);
}
