#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <functional>
#include <fstream>
#include <limits>

#include "test_support.hpp"

using namespace vesselq;
namespace fs = std::filesystem;

namespace {

/// Helper: independent NIfTI-1 writer; fills the 348-byte header byte by byte
class NiftiBytes {
public:
    NiftiBytes(bool big, std::int16_t datatype, std::int16_t bitpix, std::array<std::int16_t, 3> dims,
               std::array<float, 3> pixdim)
        : big_(big), bytes_(352, 0) {
        put32(0, 348);
        put16(40, 3);
        for (int i = 0; i < 3; ++i) put16(42 + 2 * i, dims[i]);
        for (int i = 3; i < 8; ++i) put16(42 + 2 * i, 1);
        put16(70, datatype);
        put16(72, bitpix);
        putf(76, 1.0f);
        for (int i = 0; i < 3; ++i) putf(80 + 4 * i, pixdim[i]);
        putf(108, 352.0f);
        std::memcpy(bytes_.data() + 344, "n+1\0", 4);
    }

    void put16(std::size_t at, std::int16_t v) { put_raw(at, &v, 2); }
    void put32(std::size_t at, std::int32_t v) { put_raw(at, &v, 4); }
    void putf(std::size_t at, float v) { put_raw(at, &v, 4); }
    void append(const void* src, std::size_t n) {
        const std::size_t at = bytes_.size();
        bytes_.resize(at + n);
        std::memcpy(bytes_.data() + at, src, n);
    }
    std::vector<char>& bytes() { return bytes_; }

    void write(const fs::path& p) const {
        std::ofstream out(p, std::ios::binary);
        out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    }

private:
    void put_raw(std::size_t at, const void* src, std::size_t n) {
        unsigned char tmp[8];
        std::memcpy(tmp, src, n);
        const bool host_little = std::endian::native == std::endian::little;
        if (big_ == host_little) std::reverse(tmp, tmp + n);
        std::memcpy(bytes_.data() + at, tmp, n);
    }

    bool big_;
    std::vector<char> bytes_;
};

/// Helper: a small volume of each supported dtype with non-trivial values
VoxelVolume sample_volume(DType t) {
    const Dims d{4, 3, 5};
    const Spacing sp{0.4, 0.4, 0.5};
    const std::size_t n = d.count();
    switch (t) {
        case DType::u8: {
            std::vector<std::uint8_t> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::uint8_t>((i * 37) % 256);
            return {d, sp, v};
        }
        case DType::i16: {
            std::vector<std::int16_t> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::int16_t>(int(i) * 997 - 30000);
            return {d, sp, v};
        }
        case DType::f32: {
            std::vector<float> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<float>(i) * 0.1f - 2.5f;
            return {d, sp, v};
        }
        case DType::f64: {
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = std::sqrt(double(i)) * 1e-3 - 1e5;
            return {d, sp, v};
        }
    }
    return {};
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected a vesselq::Error";
    return ErrorKind::undefined;
}

const std::vector<DType> kAllTypes{DType::u8, DType::i16, DType::f32, DType::f64};

}  // namespace

// =============================================================================
// NIfTI round trips
// =============================================================================

TEST(NiftiTest, RoundTripsEveryDtypeInBothByteOrders) {
    const auto dir = test::scratch_dir("nifti_rt");
    for (DType t : kAllTypes) {
        for (ByteOrder order : {ByteOrder::little, ByteOrder::big}) {
            const auto vol = sample_volume(t);
            const auto path = dir / (std::string(to_string(t)) + (order == ByteOrder::big ? "_be" : "_le") + ".nii");
            save_nifti(vol, path, order);
            EXPECT_EQ(load_nifti(path), vol) << to_string(t);
        }
    }
}

TEST(NiftiTest, SmallU8VolumeRoundTrips) {
    const auto dir = test::scratch_dir("nifti_u8");
    std::vector<std::uint8_t> v(64);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<std::uint8_t>(i % 2);
    const VoxelVolume vol({4, 4, 4}, {1, 1, 1}, v);
    save_nifti(vol, dir / "a.nii");
    EXPECT_EQ(load_nifti(dir / "a.nii"), vol);
}

TEST(NiftiTest, PixdimCarriesSpacing) {
    const auto dir = test::scratch_dir("nifti_pixdim");
    const VoxelVolume vol({2, 2, 2}, {0.4, 0.4, 0.5}, std::vector<std::uint8_t>(8, 1));
    save_nifti(vol, dir / "s.nii");
    const auto hdr = read_nifti_header(dir / "s.nii");
    EXPECT_FLOAT_EQ(hdr.pixdim[1], 0.4f);
    EXPECT_FLOAT_EQ(hdr.pixdim[2], 0.4f);
    EXPECT_FLOAT_EQ(hdr.pixdim[3], 0.5f);
    EXPECT_EQ(load_nifti(dir / "s.nii").spacing(), (Spacing{0.4, 0.4, 0.5}));
}

TEST(NiftiTest, ZeroDimsRejected) {
    EXPECT_EQ(kind_of([] { VoxelVolume({0, 4, 4}, {1, 1, 1}, std::vector<std::uint8_t>{}); }),
              ErrorKind::validation);
}

// =============================================================================
// Independently written files
// =============================================================================

TEST(NiftiTest, BigEndianTwinDecodesToSameVolume) {
    const auto dir = test::scratch_dir("nifti_twin");
    const std::vector<std::int16_t> values{-7, 0, 1, 300, -32768, 32767, 12, 99};
    for (bool big : {false, true}) {
        NiftiBytes f(big, 4, 16, {2, 2, 2}, {0.5f, 0.25f, 2.0f});
        std::vector<char> payload;
        for (auto v : values) {
            unsigned char b[2];
            std::memcpy(b, &v, 2);
            if (big == (std::endian::native == std::endian::little)) std::swap(b[0], b[1]);
            payload.push_back(static_cast<char>(b[0]));
            payload.push_back(static_cast<char>(b[1]));
        }
        f.bytes().insert(f.bytes().end(), payload.begin(), payload.end());
        f.write(dir / (big ? "be.nii" : "le.nii"));
    }
    const auto le = load_nifti(dir / "le.nii");
    const auto be = load_nifti(dir / "be.nii");
    EXPECT_EQ(le, be);
    ASSERT_EQ(le.dtype(), DType::i16);
    for (std::size_t i = 0; i < values.size(); ++i) EXPECT_EQ(le.value(i), values[i]);
    EXPECT_EQ(le.spacing(), (Spacing{0.5, 0.25, 2.0}));
}

TEST(NiftiTest, FloatTwinsMatchAcrossByteOrders) {
    const auto dir = test::scratch_dir("nifti_ftwin");
    const std::vector<double> values{0.0, -1.5, 3.25, 1e-300, -2.0e10, 0.1, 7.0, 42.0};
    for (bool big : {false, true}) {
        NiftiBytes f(big, 64, 64, {2, 4, 1}, {1, 1, 1});
        for (double v : values) {
            unsigned char b[8];
            std::memcpy(b, &v, 8);
            if (big == (std::endian::native == std::endian::little)) std::reverse(b, b + 8);
            f.bytes().insert(f.bytes().end(), b, b + 8);
        }
        f.write(dir / (big ? "be.nii" : "le.nii"));
    }
    EXPECT_EQ(load_nifti(dir / "le.nii"), load_nifti(dir / "be.nii"));
    EXPECT_EQ(load_nifti(dir / "be.nii").value(3), 1e-300);
}

TEST(NiftiTest, ScaleSlopeApplied) {
    const auto dir = test::scratch_dir("nifti_slope");
    NiftiBytes f(false, 2, 8, {2, 1, 1}, {1, 1, 1});
    f.putf(112, 2.0f);
    f.putf(116, -1.0f);
    const unsigned char payload[2] = {3, 10};
    f.bytes().insert(f.bytes().end(), payload, payload + 2);
    f.write(dir / "s.nii");
    const auto vol = load_nifti(dir / "s.nii");
    EXPECT_EQ(vol.dtype(), DType::f64);
    EXPECT_DOUBLE_EQ(vol.value(0), 5.0);
    EXPECT_DOUBLE_EQ(vol.value(1), 19.0);
}

// =============================================================================
// Header errors
// =============================================================================

TEST(NiftiTest, UnsupportedDatatypeRejected) {
    const auto dir = test::scratch_dir("nifti_dtype");
    NiftiBytes f(false, 8, 32, {1, 1, 1}, {1, 1, 1});
    f.append("\0\0\0\0", 4);
    f.write(dir / "i32.nii");
    EXPECT_EQ(kind_of([&] { load_nifti(dir / "i32.nii"); }), ErrorKind::unsupported_dtype);
}

TEST(NiftiTest, MalformedHeaderFieldsNamed) {
    const auto dir = test::scratch_dir("nifti_bad");
    struct Case {
        std::string field;
        std::function<void(NiftiBytes&)> mutate;
    };
    const std::vector<Case> cases{
        {"sizeof_hdr", [](NiftiBytes& f) { f.put32(0, 540); }},
        {"magic", [](NiftiBytes& f) { std::memcpy(f.bytes().data() + 344, "n+2\0", 4); }},
        {"dim[0]", [](NiftiBytes& f) { f.put16(40, 2); }},
        {"bitpix", [](NiftiBytes& f) { f.put16(72, 16); }},
        {"pixdim[2]", [](NiftiBytes& f) { f.putf(84, 0.0f); }},
    };
    for (const auto& c : cases) {
        NiftiBytes f(false, 2, 8, {2, 2, 2}, {1, 1, 1});
        f.append("\1\1\1\1\1\1\1\1", 8);
        c.mutate(f);
        f.write(dir / "bad.nii");
        try {
            load_nifti(dir / "bad.nii");
            ADD_FAILURE() << c.field << " not rejected";
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::format) << c.field;
            EXPECT_NE(std::string(e.what()).find(c.field), std::string::npos) << e.what();
        }
    }
}

TEST(NiftiTest, TruncatedPayloadReportsByteCounts) {
    const auto dir = test::scratch_dir("nifti_trunc");
    NiftiBytes f(false, 2, 8, {2, 2, 2}, {1, 1, 1});
    f.append("\1\1\1", 3);
    f.write(dir / "t.nii");
    try {
        load_nifti(dir / "t.nii");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::truncation);
        const std::string msg = e.what();
        EXPECT_NE(msg.find('8'), std::string::npos) << msg;
        EXPECT_NE(msg.find('3'), std::string::npos) << msg;
    }
}

TEST(NiftiTest, MissingFileIsIoError) {
    EXPECT_EQ(kind_of([] { load_nifti("/nonexistent/dir/x.nii"); }), ErrorKind::io);
}

// =============================================================================
// Raw sidecar format
// =============================================================================

TEST(RawTest, RoundTripsEveryDtypeInBothByteOrders) {
    const auto dir = test::scratch_dir("raw_rt");
    for (DType t : kAllTypes) {
        for (ByteOrder order : {ByteOrder::little, ByteOrder::big}) {
            const auto vol = sample_volume(t);
            const auto path = dir / (std::string(to_string(t)) + (order == ByteOrder::big ? "_be" : "_le") + ".json");
            save_raw(vol, path, order);
            EXPECT_EQ(load_raw(path), vol);
        }
    }
}

TEST(RawTest, F32CubeRoundTrips) {
    const auto dir = test::scratch_dir("raw_f32");
    std::vector<float> v(512);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i) / 7.0f;
    const VoxelVolume vol({8, 8, 8}, {0.3, 0.3, 0.6}, v);
    save_raw(vol, dir / "v.json");
    EXPECT_EQ(load_raw(dir / "v.json"), vol);
}

TEST(RawTest, ShortPayloadIsTruncation) {
    const auto dir = test::scratch_dir("raw_trunc");
    std::ofstream(dir / "v.json") << R"({"dims":[2,2,2],"spacing_mm":[1,1,1],"dtype":"u8","byte_order":"little","data_file":"v.bin"})";
    std::ofstream(dir / "v.bin", std::ios::binary) << "1234567";
    EXPECT_EQ(kind_of([&] { load_raw(dir / "v.json"); }), ErrorKind::truncation);
}

TEST(RawTest, MissingSpacingIsValidation) {
    const auto dir = test::scratch_dir("raw_nospacing");
    std::ofstream(dir / "v.json") << R"({"dims":[2,2,2],"dtype":"u8","byte_order":"little","data_file":"v.bin"})";
    std::ofstream(dir / "v.bin", std::ios::binary) << "12345678";
    EXPECT_EQ(kind_of([&] { load_raw(dir / "v.json"); }), ErrorKind::validation);
}

TEST(RawTest, DispatchByExtension) {
    const auto dir = test::scratch_dir("raw_dispatch");
    const auto vol = sample_volume(DType::i16);
    save_volume(vol, dir / "a.json");
    save_volume(vol, dir / "a.nii");
    EXPECT_EQ(load_volume(dir / "a.json"), vol);
    EXPECT_EQ(load_volume(dir / "a.nii"), vol);
}

// =============================================================================
// Thresholding
// =============================================================================

TEST(ThresholdTest, ExamplesAndBinaryInvariant) {
    const RealVolume zeros({3, 3, 3}, {1, 1, 1}, 0.0);
    EXPECT_EQ(count_foreground(threshold(zeros, 0.5)), 0u);
    const RealVolume avg({3, 3, 3}, {1, 1, 1}, 0.6);
    EXPECT_EQ(count_foreground(threshold(avg, 0.5)), 27u);
    EXPECT_EQ(count_foreground(threshold(avg, std::numeric_limits<double>::infinity())), 0u);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int trial = 0; trial < 20; ++trial) {
        RealVolume r({5, 4, 3}, {1, 1, 1}, 0.0);
        for (auto& v : r.storage()) v = u(rng);
        r[0] = std::numeric_limits<double>::quiet_NaN();
        const Mask m = threshold(to_volume(r), u(rng));
        EXPECT_TRUE(is_binary(m));
        EXPECT_EQ(m[0], 0);
    }
}

TEST(VolumeTest, ValueSemanticsAndDtypeNames) {
    EXPECT_EQ(dtype_from_string("f32"), DType::f32);
    EXPECT_EQ(kind_of([] { dtype_from_string("i32"); }), ErrorKind::unsupported_dtype);
    EXPECT_EQ(dtype_size(DType::i16), 2u);
    EXPECT_EQ(kind_of([] { validate_geometry({2, 2, 2}, {1, -1, 1}); }), ErrorKind::validation);
}
