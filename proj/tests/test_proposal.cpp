#include "selsa/errors.hpp"
#include "selsa/proposal.hpp"
#include "selsa/random.hpp"
#include "selsa/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace selsa;

namespace {

BoundingBox random_box(Rng& rng) {
  std::uniform_real_distribution<double> pos(0, 50), size(0.5, 30);
  const double x = pos(rng), y = pos(rng);
  return {x, y, x + size(rng), y + size(rng)};
}

}  // namespace

TEST_CASE("iou reference values") {
  const BoundingBox a{0, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, {20, 20, 30, 30}) == 0.0);
  CHECK(iou(a, {10, 0, 20, 10}) == 0.0);  // touching edges
  CHECK(iou(a, {5, 0, 15, 10}) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(iou(a, {2, 2, 4, 4}) == doctest::Approx(0.04).epsilon(1e-15));
}

TEST_CASE("iou is symmetric, bounded and translation invariant") {
  Rng rng = make_rng(1, 0);
  std::uniform_real_distribution<double> shift(-1000, 1000);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_box(rng), b = random_box(rng);
    const double v = iou(a, b);
    CHECK(v == iou(b, a));
    CHECK(v >= 0);
    CHECK(v <= 1);
    // Integer shifts keep coordinates exactly representable.
    const double dx = std::round(shift(rng)), dy = std::round(shift(rng));
    const BoundingBox ai{std::round(a.x1), std::round(a.y1), std::round(a.x2) + 1, std::round(a.y2) + 1};
    const BoundingBox bi{std::round(b.x1), std::round(b.y1), std::round(b.x2) + 1, std::round(b.y2) + 1};
    CHECK(iou(ai.translated(dx, dy), bi.translated(dx, dy)) == iou(ai, bi));
  }
}

TEST_CASE("motion names round trip") {
  for (auto m : kAllMotions) CHECK(parse_motion(to_string(m)) == m);
  CHECK(!parse_motion("warp").has_value());
}

TEST_CASE("format_real round trips exactly") {
  Rng rng = make_rng(2, 0);
  std::normal_distribution<double> g(0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = g(rng);
    CHECK(std::stod(format_real(v)) == v);
  }
  CHECK(format_real(0.5) == "0.5");
  CHECK(format_real(3.0) == "3");
}

TEST_CASE("proposal and ground-truth CSV round trip") {
  SyntheticSpec spec;
  spec.n_frames = 5;
  spec.feature_dim = 6;
  const auto video = generate_video(spec);
  std::stringstream props, gt;
  write_proposals_csv(props, video);
  write_ground_truth_csv(gt, video);

  std::string header;
  std::getline(std::stringstream(props.str()), header);
  CHECK(header == "frame_index,object_id,class_id,motion,x1,y1,x2,y2,f0,f1,f2,f3,f4,f5");

  const auto back = read_video_csv(props, gt, spec.n_classes);
  REQUIRE(back.length() == video.length());
  CHECK(back.feature_dim == video.feature_dim);
  CHECK(back.num_classes == video.num_classes);
  for (int f = 0; f < video.length(); ++f) {
    const auto& a = video.frames[static_cast<std::size_t>(f)];
    const auto& b = back.frames[static_cast<std::size_t>(f)];
    REQUIRE(a.proposals.size() == b.proposals.size());
    for (std::size_t i = 0; i < a.proposals.size(); ++i) {
      CHECK(a.proposals[i].feature == b.proposals[i].feature);
      CHECK(a.proposals[i].box == b.proposals[i].box);
      CHECK(a.proposals[i].class_id == b.proposals[i].class_id);
      CHECK(a.proposals[i].object_id == b.proposals[i].object_id);
      CHECK(a.proposals[i].motion == b.proposals[i].motion);
    }
    REQUIRE(a.objects.size() == b.objects.size());
    for (std::size_t i = 0; i < a.objects.size(); ++i) {
      CHECK(a.objects[i].box == b.objects[i].box);
      CHECK(a.objects[i].class_id == b.objects[i].class_id);
    }
  }
}

TEST_CASE("malformed proposal CSV is an input error") {
  std::istringstream empty_gt("frame_index,object_id,class_id,motion,x1,y1,x2,y2\n");
  std::istringstream bad_number("frame_index,object_id,class_id,motion,x1,y1,x2,y2,f0\n0,0,0,slow,0,0,1,1,abc\n");
  CHECK_THROWS_AS(read_video_csv(bad_number, empty_gt, 2), InputError);

  std::istringstream gt2("frame_index,object_id,class_id,motion,x1,y1,x2,y2\n");
  std::istringstream bad_motion("frame_index,object_id,class_id,motion,x1,y1,x2,y2,f0\n0,0,0,warp,0,0,1,1,1\n");
  CHECK_THROWS_AS(read_video_csv(bad_motion, gt2, 2), InputError);

  std::istringstream gt3("frame_index,object_id,class_id,motion,x1,y1,x2,y2\n");
  std::istringstream degenerate("frame_index,object_id,class_id,motion,x1,y1,x2,y2,f0\n0,0,0,slow,1,0,1,1,1\n");
  CHECK_THROWS_AS(read_video_csv(degenerate, gt3, 2), InputError);

  std::istringstream gt4("");
  std::istringstream none("");
  CHECK_THROWS_AS(read_video_csv(none, gt4, 2), InputError);
}

TEST_CASE("ragged videos fail validation") {
  SyntheticSpec spec;
  spec.n_frames = 3;
  auto video = generate_video(spec);
  CHECK_NOTHROW(video.validate());
  video.frames[1].proposals.pop_back();
  CHECK_THROWS_AS(video.validate(), InputError);
}
