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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "outpaint/core/tensor.hpp"
#include "outpaint/trainer.hpp"

namespace outpaint::data {

// ---------------------------------------------------------------------------
// 8-bit image I/O. Pixels are interleaved RGB rows, top to bottom.

struct Image8 {
    int h = 0;
    int w = 0;
    std::vector<unsigned char> rgb;  // h * w * 3 bytes
};

// Decodes a PNG, JPEG, or binary PPM file (sniffed by magic bytes, not
// extension). Grayscale and paletted sources are expanded to RGB; alpha is
// dropped. Throws DataError on unreadable or malformed files.
Image8 read_image(const std::string& path);

// Encodes by extension: .png, .jpg/.jpeg (quality 95), .ppm.
void write_image(const std::string& path, const Image8& img);

// [0, 255] -> [-1, 1] linear map into a 3xHxW tensor, and its inverse with
// round-to-nearest plus clamping. The pair round-trips all 256 levels.
TensorF to_tensor(const Image8& img);
Image8 from_tensor(const TensorF& x);

// ---------------------------------------------------------------------------
// Manifests: a deterministic listing of (id, path, class) rows per split.

enum class Split { Train, Eval };

const char* split_name(Split s);
Split split_from_name(const std::string& name);  // throws ConfigError

struct ManifestRecord {
    std::string id;     // "<class>/<file stem>", unique within a dataset
    std::string path;   // as stored; relative paths resolve against the cwd
    std::string label;  // class name
};

struct DatasetManifest {
    Split split = Split::Train;
    int target_h = 257;
    int target_w = 257;
    std::vector<ManifestRecord> records;
};

struct ManifestOptions {
    std::vector<std::string> class_whitelist;  // empty: select by top_k
    int top_k = 0;                             // 0: keep every class
    int holdout_per_class = 0;                 // eval images per class
    std::uint64_t seed = 0;                    // drives the holdout draw
    int target_h = 257;
    int target_w = 257;
};

// Scans root_dir's class-named subdirectories and splits each class into
// train/eval rows. Class selection takes the explicit whitelist when given,
// otherwise the top_k classes by file count (all classes when top_k is 0).
// Deterministic for a fixed tree and seed. Throws DataError for a missing
// root, an empty class, or an empty selection, and ConfigError when
// holdout_per_class is negative or leaves a class without training images.
std::pair<DatasetManifest, DatasetManifest> build_manifest(
    const std::string& root_dir, const ManifestOptions& opt);

// Plain-text table: a header with split and target size, then one
// tab-separated "id path class split" row per record.
void write_manifest(std::ostream& out, const DatasetManifest& m);
void save_manifest(const std::string& path, const DatasetManifest& m);
DatasetManifest read_manifest(std::istream& in);   // throws DataError
DatasetManifest load_manifest(const std::string& path);

// ---------------------------------------------------------------------------
// Loading.

enum class OnCorrupt { Error, Skip };

// Decode + bilinear resize to (target_h, target_w) + range map.
TensorF load_image(const ManifestRecord& rec, int target_h, int target_w);

// Loads every manifest record in order. Undecodable files either abort
// (OnCorrupt::Error) or are dropped with one log line each (OnCorrupt::Skip,
// which reports to `log` when given). Throws DataError if nothing loads.
std::vector<train::TrainExample> load_dataset(const DatasetManifest& m,
                                              OnCorrupt on_corrupt,
                                              std::ostream* log = nullptr);

// ---------------------------------------------------------------------------
// Built-in synthetic textures, so everything runs with zero downloads.

enum class TextureKind { Gradient, Stripes, Blobs };

// One seeded texture image in [0, 255].
Image8 synth_texture(TextureKind kind, int h, int w, std::uint64_t seed);

// Writes per_class PPM files into root/gradient, root/stripes, root/blobs.
// Deterministic: the same arguments always produce identical bytes.
void make_synthetic_dataset(const std::string& root, int per_class, int h,
                            int w, std::uint64_t seed);

}  // namespace outpaint::data
