#include <sstream>

#include <gtest/gtest.h>

#include "advscen/errors.hpp"
#include "advscen/scenario.hpp"

namespace advscen {
namespace {

Scene scene_with(std::size_t n, long t = 0) {
  Scene s;
  s.av = {100, 5.6, 25, 0.01};
  for (std::size_t i = 0; i < n; ++i) {
    s.bvs.push_back({110.0 + 10.0 * static_cast<double>(i), 1.9, 24, -0.02});
    s.bv_actions.push_back({0.05 * static_cast<double>(i), -0.001});
  }
  s.av_action = {0.1, 0.002};
  s.t = t;
  return s;
}

Scenario straight(std::size_t frames) {
  Scenario sc;
  for (std::size_t k = 0; k < frames; ++k) {
    Scene s = scene_with(2, static_cast<long>(k));
    s.av.x += static_cast<double>(k);
    sc.frames.push_back(s);
  }
  return sc;
}

TEST(Flatten, LayoutIsAvFirst) {
  const Scene s = scene_with(2);
  const auto v = flatten_scene(s);
  ASSERT_EQ(v.size(), 12u);
  EXPECT_EQ(v[0], 100);
  EXPECT_EQ(v[3], 0.01);
  EXPECT_EQ(v[4], 110);
  EXPECT_EQ(v[8], 120);
  const auto a = flatten_bv_actions(s);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a[2], 0.05);
}

TEST(Flatten, RoundTrip) {
  for (std::size_t n = 1; n <= kMaxBvs; ++n) {
    const Scene s = scene_with(n);
    const Scene back = unflatten_scene(flatten_scene(s));
    EXPECT_EQ(back.av, s.av);
    EXPECT_EQ(back.bvs, s.bvs);
    EXPECT_EQ(unflatten_actions(flatten_bv_actions(s)), s.bv_actions);
  }
}

TEST(Flatten, ShapeErrors) {
  Scene s = scene_with(2);
  s.bv_actions.pop_back();
  EXPECT_THROW(flatten_scene(s), StructuralError);
  EXPECT_THROW(flatten_scene(scene_with(5)), StructuralError);
  EXPECT_THROW(flatten_scene(scene_with(0)), StructuralError);
  EXPECT_THROW(unflatten_scene(std::vector<double>(7)), StructuralError);
  EXPECT_THROW(unflatten_scene(std::vector<double>(4)), StructuralError);
  EXPECT_THROW(unflatten_actions(std::vector<double>(3)), StructuralError);
}

TEST(Events, StringRoundTrip) {
  for (Event e : {Event::none, Event::av_collision, Event::bv_collision, Event::road_departure,
                  Event::horizon}) {
    EXPECT_EQ(event_from_string(to_string(e)), e);
  }
  EXPECT_THROW(event_from_string("crash"), ParseError);
}

TEST(Validate, AcceptsWellFormedScenario) { EXPECT_TRUE(validate_scenario(straight(5)).empty()); }

TEST(Validate, ReportsEveryViolation) {
  Scenario sc = straight(4);
  sc.frames[1].t = 7;
  sc.frames[2].bvs[0].v = -1;
  sc.frames[3].bvs.pop_back();
  const auto r = validate_scenario(sc);
  // frame 1 and 2 break consecutiveness, 2 has a bad BV, 3 has mismatched and inconsistent counts
  EXPECT_GE(r.size(), 5u);
  EXPECT_NE(r[0].find("frame 1"), std::string::npos);
}

TEST(Validate, EmptyAndBadInterval) {
  Scenario sc;
  sc.dt = 0;
  EXPECT_EQ(validate_scenario(sc).size(), 2u);
}

TEST(Transitions, OnePerFramePairWithDoneOnLast) {
  Scenario sc = straight(4);
  sc.outcome = Event::av_collision;
  std::vector<Event> seen;
  const auto tr = scenario_transitions(sc, [&](const Scene& next, Event e) {
    seen.push_back(e);
    return next.av.x;
  });
  ASSERT_EQ(tr.size(), 3u);
  EXPECT_FALSE(tr[0].done);
  EXPECT_TRUE(tr[2].done);
  EXPECT_EQ(seen, (std::vector<Event>{Event::none, Event::none, Event::av_collision}));
  EXPECT_EQ(tr[1].r, 102.0);
  EXPECT_EQ(tr[1].s_next, tr[2].s);
  EXPECT_EQ(tr[0].a, flatten_bv_actions(sc.frames[0]));
}

TEST(Log, RoundTripAtSixDecimals) {
  Scenario sc = straight(3);
  sc.outcome = Event::road_departure;
  std::stringstream ss;
  write_scenario_log(sc, ss);
  const Scenario back = read_scenario_log(ss);
  ASSERT_EQ(back.frames.size(), 3u);
  EXPECT_EQ(back.outcome, Event::road_departure);
  EXPECT_DOUBLE_EQ(back.dt, 0.04);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back.frames[k].t, sc.frames[k].t);
    EXPECT_NEAR(back.frames[k].av.theta, sc.frames[k].av.theta, 5e-7);
    EXPECT_NEAR(back.frames[k].bv_actions[1].dv, sc.frames[k].bv_actions[1].dv, 5e-7);
  }
}

TEST(Log, ErrorsCarryLineNumbers) {
  std::stringstream empty;
  EXPECT_THROW(read_scenario_log(empty), ParseError);
  std::stringstream bad("# scenario v1 dt=0.040000 n_bv=1 outcome=horizon\n"
                        "0 1 2 3 4 5 6 7 8 9 10 11 12\n"
                        "1 1 2 3 x 5 6 7 8 9 10 11 12\n");
  try {
    read_scenario_log(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::stringstream short_row("# scenario v1 dt=0.040000 n_bv=1 outcome=horizon\n0 1 2 3\n");
  EXPECT_THROW(read_scenario_log(short_row), ParseError);
}

}  // namespace
}  // namespace advscen
