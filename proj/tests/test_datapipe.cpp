// Copyright 2026 The Outpaint Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "outpaint/core/rng.hpp"
#include "outpaint/datapipe.hpp"
#include "outpaint/nn/ops.hpp"

using namespace outpaint;
using namespace outpaint::data;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path("/tmp") / ("outpaint_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Image8 random_image8(Rng& rng, int h, int w) {
    Image8 img;
    img.h = h;
    img.w = w;
    img.rgb.resize(static_cast<std::size_t>(h) * w * 3);
    for (auto& b : img.rgb)
        b = static_cast<unsigned char>(rng.uniform_int(0, 255));
    return img;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Builds root/<class>/<name>.ppm with distinct constant colors.
void put_ppm(const fs::path& root, const std::string& cls,
             const std::string& name, unsigned char shade, int h = 6, int w = 6) {
    fs::create_directories(root / cls);
    Image8 img;
    img.h = h;
    img.w = w;
    img.rgb.assign(static_cast<std::size_t>(h) * w * 3, shade);
    write_image((root / cls / (name + ".ppm")).string(), img);
}

std::string manifest_text(const DatasetManifest& m) {
    std::ostringstream ss;
    write_manifest(ss, m);
    return ss.str();
}

}  // namespace

TEST_CASE("datapipe: range map hits the exact endpoints") {
    Image8 img;
    img.h = 2;
    img.w = 2;
    img.rgb.assign(12, 0);
    TensorF lo = to_tensor(img);
    for (std::int64_t i = 0; i < lo.size(); ++i) CHECK(lo[i] == -1.0f);
    img.rgb.assign(12, 255);
    TensorF hi = to_tensor(img);
    for (std::int64_t i = 0; i < hi.size(); ++i) CHECK(hi[i] == 1.0f);
}

TEST_CASE("datapipe: range map round-trips all 256 levels") {
    Image8 img;
    img.h = 16;
    img.w = 16;
    img.rgb.resize(16 * 16 * 3);
    for (int v = 0; v < 256; ++v)
        for (int c = 0; c < 3; ++c)
            img.rgb[static_cast<std::size_t>(v * 3 + c)] =
                static_cast<unsigned char>(v);
    const TensorF x = to_tensor(img);
    for (std::int64_t i = 0; i < x.size(); ++i) {
        CHECK(x[i] >= -1.0f);
        CHECK(x[i] <= 1.0f);
    }
    const Image8 back = from_tensor(x);
    REQUIRE(back.rgb.size() == img.rgb.size());
    CHECK(back.rgb == img.rgb);

    // Neighbouring levels stay within one quantization step of each other.
    const std::int64_t hw = 16 * 16;
    for (int v = 0; v + 1 < 256; ++v) {
        const float a = x[3 * 0 * hw + v];  // channel 0, pixel index v
        (void)a;
    }
    SUBCASE("out-of-range floats clamp instead of wrapping") {
        TensorF wild({3, 1, 2});
        wild.at(0, 0, 0) = -3.0f;
        wild.at(0, 0, 1) = 3.0f;
        const Image8 c = from_tensor(wild);
        CHECK(c.rgb[0] == 0);
        CHECK(c.rgb[3] == 255);
    }
}

TEST_CASE("datapipe: bilinear upsample matches a direct oracle") {
    // 2x2 checkerboard, channel-constant: white/black on one diagonal.
    Image8 img;
    img.h = 2;
    img.w = 2;
    img.rgb = {255, 255, 255, 0, 0, 0, 0, 0, 0, 255, 255, 255};
    const TensorF x = to_tensor(img);
    const TensorF up = nn::bilinear_resize(x, 4, 4);
    REQUIRE(up.dim(1) == 4);
    REQUIRE(up.dim(2) == 4);

    // Independent half-pixel-convention interpolation in double.
    auto sample = [&](int c, double sy, double sx) {
        const int y0 = static_cast<int>(std::floor(sy));
        const int x0 = static_cast<int>(std::floor(sx));
        const int y1 = std::min(y0 + 1, 1), x1 = std::min(x0 + 1, 1);
        const int yc0 = std::max(y0, 0), xc0 = std::max(x0, 0);
        const double fy = sy - y0, fx = sx - x0;
        const double v00 = x.at(c, yc0, xc0), v01 = x.at(c, yc0, x1);
        const double v10 = x.at(c, y1, xc0), v11 = x.at(c, y1, x1);
        return (1 - fy) * ((1 - fx) * v00 + fx * v01) +
               fy * ((1 - fx) * v10 + fx * v11);
    };
    for (int c = 0; c < 3; ++c)
        for (int oy = 0; oy < 4; ++oy)
            for (int ox = 0; ox < 4; ++ox) {
                const double sy = (oy + 0.5) * 2.0 / 4.0 - 0.5;
                const double sx = (ox + 0.5) * 2.0 / 4.0 - 0.5;
                CHECK(up.at(c, oy, ox) ==
                      doctest::Approx(sample(c, sy, sx)).epsilon(1e-6));
            }
}

TEST_CASE("datapipe: image files round-trip per format") {
    const fs::path dir = fresh_dir("imageio");
    Rng rng(80);
    const Image8 img = random_image8(rng, 9, 7);

    SUBCASE("ppm is bitwise lossless") {
        const std::string p = (dir / "a.ppm").string();
        write_image(p, img);
        const Image8 back = read_image(p);
        CHECK(back.h == img.h);
        CHECK(back.w == img.w);
        CHECK(back.rgb == img.rgb);
    }
    SUBCASE("png is bitwise lossless") {
        const std::string p = (dir / "a.png").string();
        write_image(p, img);
        const Image8 back = read_image(p);
        CHECK(back.h == img.h);
        CHECK(back.w == img.w);
        CHECK(back.rgb == img.rgb);
    }
    SUBCASE("jpeg reproduces smooth content closely") {
        Image8 smooth;
        smooth.h = 32;
        smooth.w = 32;
        smooth.rgb.resize(32 * 32 * 3);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                for (int c = 0; c < 3; ++c)
                    smooth.rgb[(static_cast<std::size_t>(y) * 32 + x) * 3 +
                               static_cast<std::size_t>(c)] =
                        static_cast<unsigned char>(4 * y + 2 * x + 20 * c);
        const std::string p = (dir / "a.jpg").string();
        write_image(p, smooth);
        const Image8 back = read_image(p);
        REQUIRE(back.h == smooth.h);
        REQUIRE(back.w == smooth.w);
        double max_err = 0;
        for (std::size_t i = 0; i < back.rgb.size(); ++i)
            max_err = std::max(max_err,
                               std::fabs(static_cast<double>(back.rgb[i]) -
                                         static_cast<double>(smooth.rgb[i])));
        CHECK(max_err <= 16.0);
    }
    SUBCASE("format is sniffed from bytes, not the extension") {
        const std::string lying = (dir / "actually_png.ppm").string();
        {
            const std::string real = (dir / "tmp.png").string();
            write_image(real, img);
            fs::copy_file(real, lying, fs::copy_options::overwrite_existing);
        }
        const Image8 back = read_image(lying);
        CHECK(back.rgb == img.rgb);
    }
    SUBCASE("garbage and truncated files raise DataError") {
        const std::string bad = (dir / "bad.png").string();
        std::ofstream(bad, std::ios::binary) << "not an image at all";
        CHECK_THROWS_AS(read_image(bad), DataError);
        const std::string shrt = (dir / "short.ppm").string();
        std::ofstream(shrt, std::ios::binary) << "P6\n10 10\n255\nxx";
        CHECK_THROWS_AS(read_image(shrt), DataError);
        CHECK_THROWS_AS(read_image((dir / "missing.png").string()), DataError);
    }
    SUBCASE("unknown write extension is a config error") {
        CHECK_THROWS_AS(write_image((dir / "a.bmp").string(), img), ConfigError);
    }
}

TEST_CASE("datapipe: manifest building selects, splits and stays deterministic") {
    const fs::path root = fresh_dir("manifest_root");
    for (int i = 0; i < 5; ++i)
        put_ppm(root, "alpha", "a" + std::to_string(i), static_cast<unsigned char>(10 + i));
    for (int i = 0; i < 4; ++i)
        put_ppm(root, "beta", "b" + std::to_string(i), static_cast<unsigned char>(60 + i));
    for (int i = 0; i < 3; ++i)
        put_ppm(root, "gamma", "g" + std::to_string(i), static_cast<unsigned char>(120 + i));

    ManifestOptions opt;
    opt.top_k = 2;
    opt.holdout_per_class = 1;
    opt.seed = 5;
    opt.target_h = opt.target_w = 6;

    auto [tr, ev] = build_manifest(root.string(), opt);
    SUBCASE("top-k keeps the two largest classes") {
        std::set<std::string> labels;
        for (const auto& r : tr.records) labels.insert(r.label);
        CHECK(labels == std::set<std::string>{"alpha", "beta"});
        CHECK(tr.records.size() == 4 + 3);  // 5-1 and 4-1
    }
    SUBCASE("one holdout per selected class") {
        CHECK(ev.records.size() == 2);
        std::set<std::string> labels;
        for (const auto& r : ev.records) labels.insert(r.label);
        CHECK(labels == std::set<std::string>{"alpha", "beta"});
    }
    SUBCASE("splits are disjoint by id and ids are unique") {
        std::set<std::string> train_ids, eval_ids;
        for (const auto& r : tr.records) train_ids.insert(r.id);
        for (const auto& r : ev.records) eval_ids.insert(r.id);
        CHECK(train_ids.size() == tr.records.size());
        CHECK(eval_ids.size() == ev.records.size());
        for (const auto& id : eval_ids) CHECK(train_ids.count(id) == 0);
    }
    SUBCASE("same seed rebuilds identical manifests, other seeds differ") {
        auto [tr2, ev2] = build_manifest(root.string(), opt);
        CHECK(manifest_text(tr) == manifest_text(tr2));
        CHECK(manifest_text(ev) == manifest_text(ev2));
        ManifestOptions other = opt;
        other.seed = 6;
        bool any_differs = false;
        for (int tries = 0; tries < 4 && !any_differs; ++tries, ++other.seed) {
            auto [tr3, ev3] = build_manifest(root.string(), other);
            CHECK(manifest_text(tr) != "");
            any_differs = manifest_text(ev3) != manifest_text(ev);
        }
        CHECK(any_differs);
    }
    SUBCASE("whitelist overrides top-k") {
        ManifestOptions wl = opt;
        wl.class_whitelist = {"gamma"};
        auto [trw, evw] = build_manifest(root.string(), wl);
        CHECK(trw.records.size() == 2);
        CHECK(evw.records.size() == 1);
        CHECK(trw.records[0].label == "gamma");
        ManifestOptions missing = opt;
        missing.class_whitelist = {"delta"};
        CHECK_THROWS_AS(build_manifest(root.string(), missing), DataError);
    }
    SUBCASE("bad inputs raise the documented errors") {
        ManifestOptions big = opt;
        big.holdout_per_class = 3;  // beta has only 4 files, 3 leaves 1... gamma has 3
        big.class_whitelist = {"gamma"};
        CHECK_THROWS_AS(build_manifest(root.string(), big), ConfigError);
        CHECK_THROWS_AS(build_manifest((root / "nope").string(), opt), DataError);
        fs::create_directories(root / "empty_class");
        ManifestOptions all = opt;
        all.top_k = 0;
        CHECK_THROWS_AS(build_manifest(root.string(), all), DataError);
        fs::remove_all(root / "empty_class");
    }
}

TEST_CASE("datapipe: manifest text round-trips") {
    const fs::path root = fresh_dir("manifest_io");
    put_ppm(root, "alpha", "x0", 1);
    put_ppm(root, "alpha", "x1", 2);
    put_ppm(root, "alpha", "x2", 3);
    ManifestOptions opt;
    opt.holdout_per_class = 1;
    opt.target_h = opt.target_w = 6;
    auto [tr, ev] = build_manifest(root.string(), opt);

    const fs::path file = root / "train.manifest";
    save_manifest(file.string(), tr);
    const DatasetManifest back = load_manifest(file.string());
    CHECK(back.split == Split::Train);
    CHECK(back.target_h == 6);
    CHECK(back.target_w == 6);
    REQUIRE(back.records.size() == tr.records.size());
    for (std::size_t i = 0; i < back.records.size(); ++i) {
        CHECK(back.records[i].id == tr.records[i].id);
        CHECK(back.records[i].path == tr.records[i].path);
        CHECK(back.records[i].label == tr.records[i].label);
    }
    CHECK(manifest_text(back) == read_file(file));

    SUBCASE("malformed inputs are rejected") {
        std::istringstream empty("");
        CHECK_THROWS_AS(read_manifest(empty), DataError);
        std::istringstream badhdr("# other format v9\n");
        CHECK_THROWS_AS(read_manifest(badhdr), DataError);
        std::istringstream badrow(
            "# outpaint manifest v1 split=train target=6x6\nonly_two\tcols\n");
        CHECK_THROWS_AS(read_manifest(badrow), DataError);
        std::istringstream dup(
            "# outpaint manifest v1 split=train target=6x6\n"
            "a/x\tp\ta\ttrain\na/x\tq\ta\ttrain\n");
        CHECK_THROWS_AS(read_manifest(dup), DataError);
        std::istringstream wrong_split(
            "# outpaint manifest v1 split=train target=6x6\na/x\tp\ta\teval\n");
        CHECK_THROWS_AS(read_manifest(wrong_split), DataError);
    }
}

TEST_CASE("datapipe: dataset loading resizes, orders and reports skips") {
    const fs::path root = fresh_dir("loading");
    put_ppm(root, "alpha", "a0", 0, 8, 10);
    put_ppm(root, "alpha", "a1", 255, 8, 10);
    put_ppm(root, "alpha", "a2", 128, 8, 10);
    ManifestOptions opt;
    opt.target_h = 6;
    opt.target_w = 6;
    auto [tr, ev] = build_manifest(root.string(), opt);
    CHECK(ev.records.empty());

    const auto set = load_dataset(tr, OnCorrupt::Error);
    REQUIRE(set.size() == 3);
    for (std::size_t i = 0; i < set.size(); ++i) {
        CHECK(set[i].id == tr.records[i].id);
        REQUIRE(set[i].image.rank() == 3);
        CHECK(set[i].image.dim(0) == 3);
        CHECK(set[i].image.dim(1) == 6);
        CHECK(set[i].image.dim(2) == 6);
        for (std::int64_t j = 0; j < set[i].image.size(); ++j) {
            CHECK(set[i].image[j] >= -1.0f);
            CHECK(set[i].image[j] <= 1.0f);
        }
    }
    // Constant images stay constant under resize; spot-check the endpoints.
    CHECK(set[0].image[0] == -1.0f);
    CHECK(set[1].image[0] == 1.0f);

    SUBCASE("corrupt file: hard error or logged skip per policy") {
        std::ofstream((root / "alpha" / "a1.ppm"), std::ios::binary)
            << "P6\n99 99\n255\nshort";
        auto [tr2, ev2] = build_manifest(root.string(), opt);
        CHECK_THROWS_AS(load_dataset(tr2, OnCorrupt::Error), DataError);
        std::ostringstream log;
        const auto lenient = load_dataset(tr2, OnCorrupt::Skip, &log);
        CHECK(lenient.size() == 2);
        CHECK(log.str().find("skip alpha/a1.ppm") != std::string::npos);
        for (const auto& ex : lenient) CHECK(ex.id != "alpha/a1.ppm");
    }
    SUBCASE("nothing loadable is an error even when skipping") {
        for (const auto& r : tr.records)
            std::ofstream(r.path, std::ios::binary) << "junk";
        CHECK_THROWS_AS(load_dataset(tr, OnCorrupt::Skip), DataError);
    }
}

TEST_CASE("datapipe: synthetic textures are deterministic and in range") {
    const fs::path root = fresh_dir("synth");
    make_synthetic_dataset(root.string(), 4, 16, 16, 42);
    for (const char* cls : {"gradient", "stripes", "blobs"}) {
        int count = 0;
        for (const auto& f : fs::directory_iterator(root / cls)) {
            ++count;
            const Image8 img = read_image(f.path().string());
            CHECK(img.h == 16);
            CHECK(img.w == 16);
        }
        CHECK(count == 4);
    }

    // Rebuild into a second root: bitwise-identical files.
    const fs::path root2 = fresh_dir("synth2");
    make_synthetic_dataset(root2.string(), 4, 16, 16, 42);
    for (const char* cls : {"gradient", "stripes", "blobs"})
        for (const auto& f : fs::directory_iterator(root / cls)) {
            const fs::path twin = root2 / cls / f.path().filename();
            REQUIRE(fs::exists(twin));
            CHECK(read_file(f.path()) == read_file(twin));
        }

    // A different seed must actually change the pixels.
    const fs::path root3 = fresh_dir("synth3");
    make_synthetic_dataset(root3.string(), 4, 16, 16, 43);
    bool differs = false;
    for (const auto& f : fs::directory_iterator(root / "gradient")) {
        const fs::path twin = root3 / "gradient" / f.path().filename();
        if (read_file(f.path()) != read_file(twin)) differs = true;
    }
    CHECK(differs);

    // The synthetic tree feeds the standard pipeline end to end.
    ManifestOptions opt;
    opt.holdout_per_class = 1;
    opt.target_h = opt.target_w = 16;
    auto [tr, ev] = build_manifest(root.string(), opt);
    CHECK(tr.records.size() == 9);
    CHECK(ev.records.size() == 3);
    const auto set = load_dataset(tr, OnCorrupt::Error);
    CHECK(set.size() == 9);

    // Texture kinds are visually distinct (different byte streams).
    const Image8 g = synth_texture(TextureKind::Gradient, 16, 16, 7);
    const Image8 s = synth_texture(TextureKind::Stripes, 16, 16, 7);
    const Image8 b = synth_texture(TextureKind::Blobs, 16, 16, 7);
    CHECK(g.rgb != s.rgb);
    CHECK(s.rgb != b.rgb);
    CHECK(g.rgb != b.rgb);
}
