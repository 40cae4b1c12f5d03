#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "support.hpp"
#include "tilebench/cli/synthetic.hpp"
#include "tilebench/core/errors.hpp"
#include "tilebench/tissue/tissue.hpp"

using namespace tilebench;
using namespace tilebench::tissue;

namespace {

TissueProbs one_hot(TissueClass c, double p = 0.9) {
  TissueProbs probs{};
  probs.fill((1.0 - p) / 8.0);
  probs[static_cast<std::size_t>(c)] = p;
  return probs;
}

// n QC-passing tiles of one slide, the first `tumor` of them TUM.
std::vector<TileRecord> slide_tiles(const std::string& slide, int n, int tumor) {
  std::vector<TileRecord> tiles;
  for (int i = 0; i < n; ++i) {
    TileRecord t;
    t.slide_id = slide;
    t.x = 512 * (i % 40);
    t.y = 512 * (i / 40);
    t.qc_pass = true;
    t.tissue_probs = one_hot(i < tumor ? TissueClass::TUM : TissueClass::STR);
    tiles.push_back(t);
  }
  return tiles;
}

std::vector<std::string> ids(const std::vector<TileRecord>& tiles) {
  std::vector<std::string> out;
  for (const auto& t : tiles) out.push_back(t.tile_id());
  return out;
}

}  // namespace

TEST_SUITE("tissue") {

TEST_CASE("simplex check") {
  check_simplex(one_hot(TissueClass::ADI), "t");
  auto p = one_hot(TissueClass::ADI);
  p[0] += 1e-7;
  check_simplex(p, "t");
  p[0] += 1e-5;
  CHECK_THROWS_AS(check_simplex(p, "t"), MalformedProbs);
  auto neg = one_hot(TissueClass::ADI, 1.0);
  neg[0] = 1.1;
  neg[1] = -0.1;
  CHECK_THROWS_AS(check_simplex(neg, "t"), MalformedProbs);
  CHECK(argmax_class(one_hot(TissueClass::MUS)) == TissueClass::MUS);
  CHECK(class_name(TissueClass::TUM) == "TUM");
}

TEST_CASE("baseline probabilities follow the logit recipe") {
  for (const auto& f : {BaselineFeatures{0.0, 0.0}, BaselineFeatures{0.6, 0.5}, BaselineFeatures{0.6, 0.0},
                        BaselineFeatures{1.0, 1.0}}) {
    const auto p = baseline_probs(f);
    check_simplex(p, "f");
    std::array<double, 9> logit;
    logit.fill(-4.0);
    logit[1] = 12 * (0.25 - f.tissue_fraction);
    logit[8] = 12 * (f.tissue_fraction - 0.25) + 6 * (f.nuclear_fraction - 0.1);
    logit[7] = 12 * (f.tissue_fraction - 0.25) - 6 * (f.nuclear_fraction - 0.1);
    double z = 0.0;
    for (double l : logit) z += std::exp(l);
    for (int i = 0; i < 9; ++i) CHECK(p[i] == doctest::Approx(std::exp(logit[i]) / z).epsilon(1e-12));
  }
  CHECK(argmax_class(baseline_probs({0.0, 0.0})) == TissueClass::BACK);
  CHECK(argmax_class(baseline_probs({0.6, 0.5})) == TissueClass::TUM);
  CHECK(argmax_class(baseline_probs({0.6, 0.0})) == TissueClass::STR);
}

TEST_CASE("baseline separates synthetic tumor, stroma and glass") {
  const auto tumor = baseline_features(cli::synthetic_cell(cli::SyntheticTissue::Tumor, 1, 1, 2));
  const auto stroma = baseline_features(cli::synthetic_cell(cli::SyntheticTissue::Stroma, 0, 1, 3));
  const auto glass = baseline_features(cli::synthetic_cell(cli::SyntheticTissue::Glass, 0, 1, 4));
  CHECK(argmax_class(baseline_probs(tumor)) == TissueClass::TUM);
  CHECK(argmax_class(baseline_probs(stroma)) == TissueClass::STR);
  CHECK(argmax_class(baseline_probs(glass)) == TissueClass::BACK);
  CHECK(baseline_features(preprocess::white_image(32, 32)).tissue_fraction == 0.0);
}

TEST_CASE("external scores") {
  std::stringstream csv;
  csv << "tile_id,ADI,BACK,DEB,LYM,MUC,MUS,NORM,STR,TUM\n"
      << "S1_0_0,0,0,0,0,0,0,0,0.2,0.8\n"
      << "S1_512_0,0,1,0,0,0,0,0,0,0\n";
  const auto scores = read_external_scores(csv);
  REQUIRE(scores.size() == 2);
  auto tiles = slide_tiles("S1", 3, 0);
  tiles[2].qc_pass = false;
  for (auto& t : tiles) t.tissue_probs.reset();
  const auto out = classify_tiles(tiles, scores);
  CHECK(argmax_class(*out[0].tissue_probs) == TissueClass::TUM);
  CHECK(argmax_class(*out[1].tissue_probs) == TissueClass::BACK);
  CHECK(!out[2].tissue_probs);

  tiles[2].qc_pass = true;
  CHECK_THROWS_AS(classify_tiles(tiles, scores), MissingScore);
  auto bad = scores;
  bad["S1_0_0"][0] = 0.5;
  CHECK_THROWS_AS(classify_tiles(slide_tiles("S1", 1, 0), bad), MalformedProbs);
  std::stringstream header("tile,ADI\n");
  CHECK_THROWS_AS(read_external_scores(header), ParseError);
  std::stringstream value("tile_id,ADI,BACK,DEB,LYM,MUC,MUS,NORM,STR,TUM\nx,0,0,0,0,0,0,0,0,one\n");
  CHECK_THROWS_AS(read_external_scores(value), ParseError);
}

TEST_CASE("tumor gate") {
  auto t = slide_tiles("S", 1, 1).front();
  CHECK(is_tumor(t, {}));
  CHECK(!is_tumor(t, {.cap = 500, .min_tumor_prob = 0.95}));
  t.qc_pass = false;
  CHECK(!is_tumor(t, {}));
}

TEST_CASE("cap keeps exactly 500 tiles and is seed-deterministic") {
  auto tiles = slide_tiles("S1", 1500, 1200);
  const auto a = select_tumor_tiles(tiles, "P1", 3);
  REQUIRE(a.size() == 500);
  const auto picked = ids(a);
  CHECK(std::is_sorted(picked.begin(), picked.end()));
  CHECK(std::set<std::string>(picked.begin(), picked.end()).size() == 500);
  for (const auto& t : a) {
    CHECK(t.selected);
    CHECK(is_tumor(t, {}));
  }
  std::reverse(tiles.begin(), tiles.end());
  CHECK(ids(select_tumor_tiles(tiles, "P1", 3)) == picked);
  CHECK(ids(select_tumor_tiles(tiles, "P1", 4)) != picked);
  CHECK(ids(select_tumor_tiles(tiles, "P2", 3)) != picked);

  // inclusion frequency over seeds is close to 500 / 1200 for every tile
  std::map<std::string, int> freq;
  const int draws = 200;
  for (int s = 0; s < draws; ++s)
    for (const auto& id : ids(select_tumor_tiles(tiles, "P1", 100 + s))) ++freq[id];
  CHECK(freq.size() > 1150);
  const double p = 500.0 / 1200.0;
  const double sd = std::sqrt(draws * p * (1 - p));
  for (const auto& [id, n] : freq) CHECK(std::abs(n - draws * p) < 5.5 * sd);
}

TEST_CASE("below the cap every tumor tile is kept") {
  const auto tiles = slide_tiles("S1", 40, 17);
  CHECK(select_tumor_tiles(tiles, "P", 1).size() == 17);
  CHECK(select_tumor_tiles(tiles, "P", 1, {.cap = 17}).size() == 17);
  CHECK(select_tumor_tiles(tiles, "P", 1, {.cap = 5}).size() == 5);
  CHECK_THROWS_AS(select_tumor_tiles(slide_tiles("S1", 10, 0), "P", 1), NoTumorTiles);
  auto unscored = tiles;
  unscored[3].tissue_probs.reset();
  CHECK_THROWS_AS(select_tumor_tiles(unscored, "P", 1), InvariantViolation);
}

TEST_CASE("cohort selection marks tiles and reports excluded patients") {
  CohortManifest m;
  for (int p = 0; p < 3; ++p) {
    SlideRecord s;
    s.slide_id = "S" + std::to_string(p);
    s.patient_id = "P" + std::to_string(p);
    s.labels[Task::MSI] = p % 2;
    m.slides.push_back(s);
  }
  std::vector<TileRecord> tiles;
  for (const auto& t : slide_tiles("S0", 700, 600)) tiles.push_back(t);
  for (const auto& t : slide_tiles("S1", 5, 0)) tiles.push_back(t);
  for (const auto& t : slide_tiles("S2", 6, 2)) tiles.push_back(t);
  const auto r = select_cohort(m, tiles, 8);
  CHECK(r.excluded_patients == std::vector<std::string>{"P1"});
  std::map<std::string, int> per_slide;
  for (const auto& t : r.tiles)
    if (t.selected) ++per_slide[t.slide_id];
  CHECK(per_slide["S0"] == 500);
  CHECK(per_slide["S1"] == 0);
  CHECK(per_slide["S2"] == 2);
  CHECK(r.tiles.size() == tiles.size());
  std::set<std::string> marked;
  for (const auto& t : r.tiles)
    if (t.selected && t.slide_id == "S0") marked.insert(t.tile_id());
  const auto direct = ids(select_tumor_tiles(slide_tiles("S0", 700, 600), "P0", 8));
  CHECK(marked == std::set<std::string>(direct.begin(), direct.end()));
}

}  // TEST_SUITE
