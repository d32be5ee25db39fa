#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "edgenet/dataset.hpp"
#include "checks.hpp"
#include "helpers.hpp"

using namespace edgenet;
namespace fs = std::filesystem;

namespace {

void corrupt_byte(const fs::path& p, std::streamoff off, char value) {
  std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
  CHECK(static_cast<bool>(f), "corrupt target opens");
  f.seekp(off);
  f.put(value);
}

std::vector<std::vector<double>> class_means(const Dataset& ds) {
  const size_t dim = ds.inputs[0].f32.size();
  std::vector<std::vector<double>> mu(ds.num_classes,
                                      std::vector<double>(dim, 0.0));
  std::vector<int> count(ds.num_classes, 0);
  for (size_t i = 0; i < ds.size(); ++i) {
    ++count[ds.labels[i]];
    for (size_t d = 0; d < dim; ++d) mu[ds.labels[i]][d] += ds.inputs[i].f32[d];
  }
  for (int c = 0; c < ds.num_classes; ++c)
    for (size_t d = 0; d < dim; ++d) mu[c][d] /= count[c];
  return mu;
}

double dist2(const std::vector<double>& a, const float* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

void run_dataset_tests() {
  printf("=== datasets ===\n");

  {
    // Synthetic generation is deterministic and separable.
    SyntheticSpec spec;
    spec.samples = 64;
    spec.seed = 21;
    Dataset a = gen_synthetic(spec);
    Dataset b = gen_synthetic(spec);
    CHECK(a.size() == 64 && a.num_classes == 4, "spec respected");
    CHECK(a.labels == b.labels, "same spec, same labels");
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(testutil::bits_equal(a.inputs[i].f32, b.inputs[i].f32),
            "same spec, same bytes");
      CHECK(a.labels[i] == static_cast<int>(i) % 4, "labels are round robin");
      for (float v : a.inputs[i].f32)
        CHECK(v >= 0.0f && v <= 1.0f, "pixels stay in [0, 1]");
    }
    CHECK(a.provenance.find("synthetic") != std::string::npos,
          "provenance names the generator");

    SyntheticSpec harder = spec;
    harder.hard_fraction = 0.5;
    Dataset h = gen_synthetic(harder);
    bool differs = false;
    for (size_t i = 0; i < a.size() && !differs; ++i)
      differs = !testutil::bits_equal(a.inputs[i].f32, h.inputs[i].f32);
    CHECK(differs, "hard fraction changes the data");

    SyntheticSpec other = spec;
    other.seed = 22;
    Dataset o = gen_synthetic(other);
    CHECK(!testutil::bits_equal(a.inputs[0].f32, o.inputs[0].f32),
          "seed changes the data");

    // Nearest class mean classifies every sample at the default noise.
    const auto mu = class_means(a);
    const size_t dim = a.inputs[0].f32.size();
    for (size_t i = 0; i < a.size(); ++i) {
      int best = 0;
      double bestd = dist2(mu[0], a.inputs[i].f32.data(), dim);
      for (int c = 1; c < 4; ++c) {
        const double d = dist2(mu[c], a.inputs[i].f32.data(), dim);
        if (d < bestd) {
          bestd = d;
          best = c;
        }
      }
      CHECK(best == a.labels[i], "classes form separated blobs");
    }

    SyntheticSpec badshape = spec;
    badshape.shape = {4, 8};
    CHECK_THROWS_CODE(gen_synthetic(badshape), ErrorCode::ShapeMismatch);
    SyntheticSpec badclasses = spec;
    badclasses.num_classes = 0;
    CHECK_THROWS_CODE(gen_synthetic(badclasses), ErrorCode::LabelOutOfRange);
  }

  const fs::path dir = fs::temp_directory_path() / "edgenet_dataset_test";
  fs::create_directories(dir);
  const std::string img = (dir / "images.idx").string();
  const std::string lab = (dir / "labels.idx").string();

  {
    // IDX round trip quantizes pixels to 1/255 steps.
    SyntheticSpec spec;
    spec.samples = 20;
    spec.shape = {1, 8, 8};
    spec.seed = 31;
    Dataset ds = gen_synthetic(spec);
    save_idx(ds, img, lab);
    Dataset back = load_idx(img, lab);
    CHECK(back.size() == ds.size(), "sample count survives");
    CHECK(back.labels == ds.labels, "labels survive exactly");
    CHECK(back.num_classes == 4, "classes from the label range");
    CHECK(back.provenance.rfind("idx:", 0) == 0, "provenance names the file");
    for (size_t i = 0; i < ds.size(); ++i) {
      CHECK(back.inputs[i].shape == ds.inputs[i].shape, "shape survives");
      for (size_t d = 0; d < ds.inputs[i].f32.size(); ++d) {
        const double err =
            std::fabs(back.inputs[i].f32[d] - ds.inputs[i].f32[d]);
        CHECK(err <= 0.5 / 255.0 + 1e-7, "pixels within half a step");
      }
    }

    // Corruptions are named precisely.
    CHECK_THROWS_CODE(load_idx((dir / "absent.idx").string(), lab),
                      ErrorCode::IoError);
    corrupt_byte(img, 0, 0x7f);
    CHECK_THROWS_CODE(load_idx(img, lab), ErrorCode::BadMagic);
    save_idx(ds, img, lab);
    corrupt_byte(lab, 0, 0x7f);
    CHECK_THROWS_CODE(load_idx(img, lab), ErrorCode::BadMagic);

    SyntheticSpec small = spec;
    small.samples = 12;
    Dataset ds2 = gen_synthetic(small);
    const std::string lab2 = (dir / "labels2.idx").string();
    const std::string img2 = (dir / "images2.idx").string();
    save_idx(ds2, img2, lab2);
    save_idx(ds, img, lab);
    CHECK_THROWS_CODE(load_idx(img, lab2), ErrorCode::CountMismatch);

    fs::resize_file(img, fs::file_size(img) - 5);
    CHECK_THROWS_CODE(load_idx(img, lab), ErrorCode::TruncatedFile);
    save_idx(ds, img, lab);

    // The writer only takes single-channel images and byte-sized labels.
    SyntheticSpec wide = spec;
    wide.shape = {4, 8, 8};
    Dataset dswide = gen_synthetic(wide);
    CHECK_THROWS_CODE(save_idx(dswide, img2, lab2), ErrorCode::ShapeMismatch);
    Dataset big = ds;
    big.labels[0] = 300;
    CHECK_THROWS_CODE(save_idx(big, img2, lab2), ErrorCode::LabelOutOfRange);
  }

  {
    // CSV round trip is exact for f32 values.
    SyntheticSpec spec;
    spec.samples = 10;
    spec.seed = 33;
    Dataset ds = gen_synthetic(spec);
    const std::string csv = (dir / "data.csv").string();
    save_csv(ds, csv);
    Dataset back = load_csv(csv, {4, 8, 8});
    CHECK(back.size() == ds.size(), "row count survives");
    CHECK(back.labels == ds.labels, "labels survive");
    CHECK(back.num_classes == 4, "classes from the label range");
    for (size_t i = 0; i < ds.size(); ++i)
      CHECK(testutil::bits_equal(back.inputs[i].f32, ds.inputs[i].f32),
            "nine significant digits round trip f32 exactly");

    auto write_csv = [&](const std::string& text) {
      std::ofstream f(csv, std::ios::trunc);
      f << text;
    };
    write_csv("0,1.0,2.0,3.0\n");
    Dataset tiny = load_csv(csv, {3});
    CHECK(tiny.size() == 1 && tiny.inputs[0].f32[2] == 3.0f, "tiny csv reads");
    write_csv("0,1.0,oops\n");
    CHECK_THROWS_CODE(load_csv(csv, {3}), ErrorCode::ParseError);
    write_csv("1.5,1.0,2.0,3.0\n");
    CHECK_THROWS_CODE(load_csv(csv, {3}), ErrorCode::ParseError);
    write_csv("-2,1.0,2.0,3.0\n");
    CHECK_THROWS_CODE(load_csv(csv, {3}), ErrorCode::ParseError);
    write_csv("0,1.0,2.0\n");
    CHECK_THROWS_CODE(load_csv(csv, {3}), ErrorCode::LengthMismatch);
    CHECK_THROWS_CODE(load_csv((dir / "absent.csv").string(), {3}),
                      ErrorCode::IoError);
  }

  fs::remove_all(dir);
  printf("datasets: ok\n");
}
