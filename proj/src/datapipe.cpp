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

#include "outpaint/datapipe.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <jpeglib.h>
#include <png.h>

#include "outpaint/core/errors.hpp"
#include "outpaint/core/rng.hpp"
#include "outpaint/nn/ops.hpp"

namespace outpaint::data {

namespace fs = std::filesystem;

namespace {

// --------------------------------------------------------------------- PNG

Image8 read_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw DataError("read_image: " + path + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    Image8 out;
    out.h = static_cast<int>(image.height);
    out.w = static_cast<int>(image.width);
    out.rgb.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DataError("read_image: " + path + ": " + msg);
    }
    return out;
}

void write_png(const std::string& path, const Image8& img) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.format = PNG_FORMAT_RGB;
    image.height = static_cast<png_uint_32>(img.h);
    image.width = static_cast<png_uint_32>(img.w);
    if (!png_image_write_to_file(&image, path.c_str(), 0, img.rgb.data(), 0,
                                 nullptr))
        throw DataError("write_image: " + path + ": " + image.message);
}

// -------------------------------------------------------------------- JPEG

struct JpegErr {
    jpeg_error_mgr mgr;
    std::jmp_buf env;
    char message[JMSG_LENGTH_MAX] = {0};
};

void jpeg_throw(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->env, 1);
}

struct FileCloser {
    std::FILE* f = nullptr;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

Image8 read_jpeg(const std::string& path) {
    FileCloser fc;
    fc.f = std::fopen(path.c_str(), "rb");
    if (!fc.f) throw DataError("read_image: cannot open " + path);

    jpeg_decompress_struct cinfo;
    JpegErr err;
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_throw;
    if (setjmp(err.env)) {
        jpeg_destroy_decompress(&cinfo);
        throw DataError("read_image: " + path + ": " + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fc.f);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    Image8 out;
    out.h = static_cast<int>(cinfo.output_height);
    out.w = static_cast<int>(cinfo.output_width);
    out.rgb.resize(static_cast<std::size_t>(out.h) * out.w * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* row =
            out.rgb.data() +
            static_cast<std::size_t>(cinfo.output_scanline) * out.w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

void write_jpeg(const std::string& path, const Image8& img) {
    FileCloser fc;
    fc.f = std::fopen(path.c_str(), "wb");
    if (!fc.f) throw DataError("write_image: cannot open " + path);

    jpeg_compress_struct cinfo;
    JpegErr err;
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_throw;
    if (setjmp(err.env)) {
        jpeg_destroy_compress(&cinfo);
        throw DataError("write_image: " + path + ": " + err.message);
    }
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, fc.f);
    cinfo.image_width = static_cast<JDIMENSION>(img.w);
    cinfo.image_height = static_cast<JDIMENSION>(img.h);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, 95, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        const unsigned char* row =
            img.rgb.data() + static_cast<std::size_t>(cinfo.next_scanline) *
                                 img.w * 3;
        unsigned char* rows[1] = {const_cast<unsigned char*>(row)};
        jpeg_write_scanlines(&cinfo, rows, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
}

// --------------------------------------------------------------------- PPM

Image8 read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("read_image: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6") throw DataError("read_image: " + path + ": not a P6 ppm");
    auto next_token = [&]() -> long {
        // Skip whitespace and '#' comment lines between header fields.
        while (true) {
            const int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        long v = -1;
        in >> v;
        return v;
    };
    const long w = next_token(), h = next_token(), maxval = next_token();
    if (!in || w <= 0 || h <= 0 || maxval != 255)
        throw DataError("read_image: " + path + ": bad ppm header");
    in.get();  // single whitespace after maxval
    Image8 out;
    out.h = static_cast<int>(h);
    out.w = static_cast<int>(w);
    out.rgb.resize(static_cast<std::size_t>(h) * w * 3);
    in.read(reinterpret_cast<char*>(out.rgb.data()),
            static_cast<std::streamsize>(out.rgb.size()));
    if (in.gcount() != static_cast<std::streamsize>(out.rgb.size()))
        throw DataError("read_image: " + path + ": truncated ppm payload");
    return out;
}

void write_ppm(const std::string& path, const Image8& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("write_image: cannot open " + path);
    out << "P6\n" << img.w << " " << img.h << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()),
              static_cast<std::streamsize>(img.rgb.size()));
    if (!out) throw DataError("write_image: failed writing " + path);
}

std::string lower_ext(const std::string& path) {
    std::string e = fs::path(path).extension().string();
    std::transform(e.begin(), e.end(), e.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e;
}

bool is_image_ext(const std::string& path) {
    const std::string e = lower_ext(path);
    return e == ".png" || e == ".jpg" || e == ".jpeg" || e == ".ppm";
}

void check_pixels(const Image8& img, const char* what) {
    if (img.h <= 0 || img.w <= 0 ||
        img.rgb.size() != static_cast<std::size_t>(img.h) * img.w * 3)
        throw ShapeError(std::string(what) + ": image buffer does not match its dimensions");
}

}  // namespace

Image8 read_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw DataError("read_image: cannot open " + path);
    unsigned char magic[2] = {0, 0};
    probe.read(reinterpret_cast<char*>(magic), 2);
    if (probe.gcount() != 2)
        throw DataError("read_image: " + path + ": file too short");
    probe.close();

    if (magic[0] == 0x89 && magic[1] == 'P') return read_png(path);
    if (magic[0] == 0xFF && magic[1] == 0xD8) return read_jpeg(path);
    if (magic[0] == 'P' && magic[1] == '6') return read_ppm(path);
    throw DataError("read_image: " + path + ": unrecognized image format");
}

void write_image(const std::string& path, const Image8& img) {
    check_pixels(img, "write_image");
    const std::string e = lower_ext(path);
    if (e == ".png") return write_png(path, img);
    if (e == ".jpg" || e == ".jpeg") return write_jpeg(path, img);
    if (e == ".ppm") return write_ppm(path, img);
    throw ConfigError("write_image: unsupported extension '" + e + "' for " + path);
}

TensorF to_tensor(const Image8& img) {
    check_pixels(img, "to_tensor");
    TensorF x({3, img.h, img.w});
    const std::int64_t hw = static_cast<std::int64_t>(img.h) * img.w;
    for (std::int64_t i = 0; i < hw; ++i)
        for (int c = 0; c < 3; ++c)
            x.data()[c * hw + i] = static_cast<float>(
                static_cast<double>(img.rgb[static_cast<std::size_t>(i * 3 + c)]) *
                    (2.0 / 255.0) -
                1.0);
    return x;
}

Image8 from_tensor(const TensorF& x) {
    if (x.rank() != 3 || x.dim(0) != 3)
        throw ShapeError("from_tensor: expected a 3xHxW tensor");
    Image8 img;
    img.h = x.dim(1);
    img.w = x.dim(2);
    const std::int64_t hw = static_cast<std::int64_t>(img.h) * img.w;
    img.rgb.resize(static_cast<std::size_t>(hw) * 3);
    for (std::int64_t i = 0; i < hw; ++i)
        for (int c = 0; c < 3; ++c) {
            const double v =
                std::round((static_cast<double>(x.data()[c * hw + i]) + 1.0) * 127.5);
            img.rgb[static_cast<std::size_t>(i * 3 + c)] =
                static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
        }
    return img;
}

// ------------------------------------------------------------------ manifest

const char* split_name(Split s) { return s == Split::Train ? "train" : "eval"; }

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "eval") return Split::Eval;
    throw ConfigError("manifest: unknown split '" + name + "'");
}

std::pair<DatasetManifest, DatasetManifest> build_manifest(
    const std::string& root_dir, const ManifestOptions& opt) {
    if (opt.holdout_per_class < 0)
        throw ConfigError("build_manifest: holdout_per_class must be >= 0");
    if (opt.top_k < 0) throw ConfigError("build_manifest: top_k must be >= 0");
    if (opt.target_h <= 0 || opt.target_w <= 0)
        throw ConfigError("build_manifest: target size must be positive");
    if (!fs::is_directory(root_dir))
        throw DataError("build_manifest: " + root_dir + " is not a directory");

    // Sorted class -> sorted file list, so the walk never depends on
    // directory iteration order.
    std::map<std::string, std::vector<std::string>> classes;
    for (const auto& entry : fs::directory_iterator(root_dir)) {
        if (!entry.is_directory()) continue;
        const std::string cls = entry.path().filename().string();
        auto& files = classes[cls];
        for (const auto& f : fs::directory_iterator(entry.path()))
            if (f.is_regular_file() && is_image_ext(f.path().string()))
                files.push_back(f.path().filename().string());
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw DataError("build_manifest: class directory '" + cls + "' has no images");
    }
    if (classes.empty())
        throw DataError("build_manifest: no class directories under " + root_dir);

    std::vector<std::string> selected;
    if (!opt.class_whitelist.empty()) {
        selected = opt.class_whitelist;
        std::sort(selected.begin(), selected.end());
        selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
        for (const std::string& cls : selected)
            if (!classes.count(cls))
                throw DataError("build_manifest: whitelisted class '" + cls +
                                "' not found under " + root_dir);
    } else {
        for (const auto& [cls, files] : classes) selected.push_back(cls);
        if (opt.top_k > 0 && opt.top_k < static_cast<int>(selected.size())) {
            // Largest classes first; name breaks ties so the cut is stable.
            std::stable_sort(selected.begin(), selected.end(),
                             [&](const std::string& a, const std::string& b) {
                                 const std::size_t na = classes[a].size();
                                 const std::size_t nb = classes[b].size();
                                 return na != nb ? na > nb : a < b;
                             });
            selected.resize(static_cast<std::size_t>(opt.top_k));
            std::sort(selected.begin(), selected.end());
        }
    }

    DatasetManifest train, eval;
    train.split = Split::Train;
    eval.split = Split::Eval;
    train.target_h = eval.target_h = opt.target_h;
    train.target_w = eval.target_w = opt.target_w;

    Rng rng(opt.seed);
    for (const std::string& cls : selected) {
        std::vector<std::string> files = classes[cls];
        if (opt.holdout_per_class >= static_cast<int>(files.size()))
            throw ConfigError("build_manifest: holdout of " +
                              std::to_string(opt.holdout_per_class) +
                              " leaves class '" + cls + "' (" +
                              std::to_string(files.size()) +
                              " images) without training data");
        // Seeded Fisher-Yates, then the first holdout_per_class go to eval.
        for (std::size_t i = files.size() - 1; i > 0; --i)
            std::swap(files[i],
                      files[static_cast<std::size_t>(
                          rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
        for (std::size_t i = 0; i < files.size(); ++i) {
            ManifestRecord rec;
            rec.id = cls + "/" + files[i];
            rec.path = (fs::path(root_dir) / cls / files[i]).string();
            rec.label = cls;
            (i < static_cast<std::size_t>(opt.holdout_per_class) ? eval : train)
                .records.push_back(std::move(rec));
        }
    }
    auto by_id = [](const ManifestRecord& a, const ManifestRecord& b) {
        return a.id < b.id;
    };
    std::sort(train.records.begin(), train.records.end(), by_id);
    std::sort(eval.records.begin(), eval.records.end(), by_id);
    return {std::move(train), std::move(eval)};
}

void write_manifest(std::ostream& out, const DatasetManifest& m) {
    out << "# outpaint manifest v1 split=" << split_name(m.split)
        << " target=" << m.target_h << "x" << m.target_w << "\n";
    for (const ManifestRecord& r : m.records)
        out << r.id << "\t" << r.path << "\t" << r.label << "\t"
            << split_name(m.split) << "\n";
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_manifest: cannot open " + path);
    write_manifest(out, m);
    if (!out.flush()) throw DataError("save_manifest: failed writing " + path);
}

DatasetManifest read_manifest(std::istream& in) {
    std::string header;
    if (!std::getline(in, header))
        throw DataError("read_manifest: empty input");
    DatasetManifest m;
    {
        std::istringstream hs(header);
        std::string hash, name, what, version, split_kv, target_kv;
        hs >> hash >> name >> what >> version >> split_kv >> target_kv;
        if (hash != "#" || name != "outpaint" || what != "manifest" ||
            version != "v1" || split_kv.rfind("split=", 0) != 0 ||
            target_kv.rfind("target=", 0) != 0)
            throw DataError("read_manifest: bad header line");
        m.split = split_from_name(split_kv.substr(6));
        const std::string tgt = target_kv.substr(7);
        const std::size_t x = tgt.find('x');
        if (x == std::string::npos)
            throw DataError("read_manifest: bad target size");
        try {
            m.target_h = std::stoi(tgt.substr(0, x));
            m.target_w = std::stoi(tgt.substr(x + 1));
        } catch (const std::exception&) {
            throw DataError("read_manifest: bad target size");
        }
    }
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        ManifestRecord rec;
        std::string split_col;
        if (!std::getline(ls, rec.id, '\t') || !std::getline(ls, rec.path, '\t') ||
            !std::getline(ls, rec.label, '\t') || !std::getline(ls, split_col))
            throw DataError("read_manifest: malformed row: " + line);
        if (split_from_name(split_col) != m.split)
            throw DataError("read_manifest: row split does not match header: " + line);
        m.records.push_back(std::move(rec));
    }
    for (std::size_t i = 1; i < m.records.size(); ++i)
        if (m.records[i].id == m.records[i - 1].id)
            throw DataError("read_manifest: duplicate id '" + m.records[i].id + "'");
    return m;
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_manifest: cannot open " + path);
    return read_manifest(in);
}

// ------------------------------------------------------------------- loading

TensorF load_image(const ManifestRecord& rec, int target_h, int target_w) {
    if (target_h <= 0 || target_w <= 0)
        throw ConfigError("load_image: target size must be positive");
    const TensorF x = to_tensor(read_image(rec.path));
    if (x.dim(1) == target_h && x.dim(2) == target_w) return x;
    return nn::bilinear_resize(x, target_h, target_w);
}

std::vector<train::TrainExample> load_dataset(const DatasetManifest& m,
                                              OnCorrupt on_corrupt,
                                              std::ostream* log) {
    std::vector<train::TrainExample> out;
    out.reserve(m.records.size());
    for (const ManifestRecord& rec : m.records) {
        try {
            train::TrainExample ex;
            ex.id = rec.id;
            ex.image = load_image(rec, m.target_h, m.target_w);
            out.push_back(std::move(ex));
        } catch (const DataError& e) {
            if (on_corrupt == OnCorrupt::Error) throw;
            if (log) *log << "skip " << rec.id << ": " << e.what() << "\n";
        }
    }
    if (!m.records.empty() && out.empty())
        throw DataError("load_dataset: no usable images in manifest");
    return out;
}

// ----------------------------------------------------------------- synthetic

namespace {

unsigned char quantize(double v01) {
    return static_cast<unsigned char>(std::clamp(std::round(v01 * 255.0), 0.0, 255.0));
}

}  // namespace

Image8 synth_texture(TextureKind kind, int h, int w, std::uint64_t seed) {
    if (h <= 0 || w <= 0)
        throw ConfigError("synth_texture: size must be positive");
    Rng rng(seed);
    Image8 img;
    img.h = h;
    img.w = w;
    img.rgb.resize(static_cast<std::size_t>(h) * w * 3);

    double c0[3], c1[3];
    for (int c = 0; c < 3; ++c) {
        c0[c] = rng.uniform();
        c1[c] = rng.uniform();
    }
    const double theta = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const double dx = std::cos(theta), dy = std::sin(theta);

    auto store = [&](int y, int x, const double* rgb01) {
        const std::size_t base = (static_cast<std::size_t>(y) * w + x) * 3;
        for (int c = 0; c < 3; ++c) img.rgb[base + c] = quantize(rgb01[c]);
    };

    switch (kind) {
        case TextureKind::Gradient: {
            const double span = std::fabs(dx) * (w - 1) + std::fabs(dy) * (h - 1) + 1e-12;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double proj = dx * x + dy * y;
                    const double t = std::clamp(
                        (proj + (dx < 0 ? -dx * (w - 1) : 0.0) +
                         (dy < 0 ? -dy * (h - 1) : 0.0)) / span,
                        0.0, 1.0);
                    double rgb01[3];
                    for (int c = 0; c < 3; ++c)
                        rgb01[c] = c0[c] + (c1[c] - c0[c]) * t;
                    store(y, x, rgb01);
                }
            break;
        }
        case TextureKind::Stripes: {
            const double period = rng.uniform(4.0, std::max(8.0, w / 2.0));
            const double phase = rng.uniform(0.0, period);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double proj = dx * x + dy * y + phase;
                    const double t =
                        0.5 + 0.5 * std::sin(2.0 * 3.14159265358979323846 * proj / period);
                    double rgb01[3];
                    for (int c = 0; c < 3; ++c)
                        rgb01[c] = c0[c] + (c1[c] - c0[c]) * t;
                    store(y, x, rgb01);
                }
            break;
        }
        case TextureKind::Blobs: {
            const int blobs = static_cast<int>(rng.uniform_int(3, 8));
            std::vector<double> cx(static_cast<std::size_t>(blobs)),
                cy(static_cast<std::size_t>(blobs)), sg(static_cast<std::size_t>(blobs));
            std::vector<std::array<double, 3>> col(static_cast<std::size_t>(blobs));
            for (int b = 0; b < blobs; ++b) {
                cx[static_cast<std::size_t>(b)] = rng.uniform(0.0, w - 1.0);
                cy[static_cast<std::size_t>(b)] = rng.uniform(0.0, h - 1.0);
                sg[static_cast<std::size_t>(b)] =
                    rng.uniform(std::max(2.0, w / 16.0), std::max(4.0, w / 4.0));
                for (int c = 0; c < 3; ++c)
                    col[static_cast<std::size_t>(b)][static_cast<std::size_t>(c)] =
                        rng.uniform();
            }
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double rgb01[3] = {c0[0] * 0.25, c0[1] * 0.25, c0[2] * 0.25};
                    for (int b = 0; b < blobs; ++b) {
                        const double ddx = x - cx[static_cast<std::size_t>(b)];
                        const double ddy = y - cy[static_cast<std::size_t>(b)];
                        const double s = sg[static_cast<std::size_t>(b)];
                        const double g = std::exp(-(ddx * ddx + ddy * ddy) / (2.0 * s * s));
                        for (int c = 0; c < 3; ++c)
                            rgb01[c] += g * col[static_cast<std::size_t>(b)]
                                                [static_cast<std::size_t>(c)];
                    }
                    for (int c = 0; c < 3; ++c) rgb01[c] = std::clamp(rgb01[c], 0.0, 1.0);
                    store(y, x, rgb01);
                }
            break;
        }
    }
    return img;
}

void make_synthetic_dataset(const std::string& root, int per_class, int h,
                            int w, std::uint64_t seed) {
    if (per_class <= 0)
        throw ConfigError("make_synthetic_dataset: per_class must be positive");
    const struct {
        TextureKind kind;
        const char* name;
    } kinds[] = {{TextureKind::Gradient, "gradient"},
                 {TextureKind::Stripes, "stripes"},
                 {TextureKind::Blobs, "blobs"}};
    Rng stream(seed);
    for (const auto& k : kinds) {
        const fs::path dir = fs::path(root) / k.name;
        fs::create_directories(dir);
        for (int i = 0; i < per_class; ++i) {
            const std::uint64_t file_seed = stream.next_u64();
            char name[64];
            std::snprintf(name, sizeof(name), "%s_%04d.ppm", k.name, i);
            write_ppm((dir / name).string(), synth_texture(k.kind, h, w, file_seed));
        }
    }
}

}  // namespace outpaint::data
