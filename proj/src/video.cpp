#include "dvp/video.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <string>

namespace dvp {

namespace fs = std::filesystem;

namespace {

void check_dims(int h, int w, int c) {
    if (h < 1 || w < 1) throw InvalidArgument("frame: height and width must be positive");
    if (c != 1 && c != 3) throw InvalidArgument("frame: channels must be 1 or 3");
}

}  // namespace

Frame::Frame(int height, int width, int channels, float fill)
    : h_(height), w_(width), c_(channels) {
    check_dims(height, width, channels);
    data_.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

Frame::Frame(int height, int width, int channels, std::vector<float> data)
    : h_(height), w_(width), c_(channels), data_(std::move(data)) {
    check_dims(height, width, channels);
    if (data_.size() != pixel_count() * static_cast<std::size_t>(channels))
        throw ShapeError("frame: data size does not match dimensions");
}

Frame Frame::clamped() const {
    Frame out = *this;
    for (auto& v : out.data_) v = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
    return out;
}

VideoClip::VideoClip(std::vector<Frame> frames) : frames_(std::move(frames)) {
    if (frames_.size() < 2) throw InvalidArgument("video clip needs at least 2 frames");
    for (const auto& f : frames_)
        if (!f.same_shape(frames_.front())) throw ShapeError("video clip: frames differ in dimensions");
}

void require_same_shape(const Frame& a, const Frame& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": frame dimensions differ (" + std::to_string(a.height()) + "x" +
                         std::to_string(a.width()) + "x" + std::to_string(a.channels()) + " vs " +
                         std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                         std::to_string(b.channels()) + ")");
}

void require_same_shape(const VideoClip& a, const VideoClip& b, const char* what) {
    if (a.length() != b.length())
        throw ShapeError(std::string(what) + ": clip lengths differ (" + std::to_string(a.length()) + " vs " +
                         std::to_string(b.length()) + ")");
    if (a.length() > 0) require_same_shape(a[0], b[0], what);
}

double frame_distance_l1(const Frame& a, const Frame& b) {
    require_same_shape(a, b, "frame_distance_l1");
    const auto x = a.data();
    const auto y = b.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += std::fabs(static_cast<double>(x[i]) - y[i]);
    return sum / static_cast<double>(x.size());
}

Frame load_frame(const fs::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw IoError("cannot decode " + path.string() + ": " + image.message);

    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int channels = color ? 3 : 1;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError("cannot decode " + path.string() + ": " + image.message);
    }

    std::vector<float> data(buffer.size());
    std::transform(buffer.begin(), buffer.end(), data.begin(), [](png_byte v) { return v / 255.0f; });
    return Frame(static_cast<int>(image.height), static_cast<int>(image.width), channels, std::move(data));
}

void save_frame(const Frame& frame, const fs::path& path) {
    std::vector<png_byte> buffer(frame.size());
    const auto src = frame.data();
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        const float v = std::isnan(src[i]) ? 0.0f : std::clamp(src[i], 0.0f, 1.0f);
        buffer[i] = static_cast<png_byte>(std::lround(v * 255.0f));
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(frame.width());
    image.height = static_cast<png_uint_32>(frame.height());
    image.format = frame.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr))
        throw IoError("cannot write " + path.string() + ": " + image.message);
}

VideoClip load_clip(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (ext == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    if (files.size() < 2)
        throw InvalidArgument(dir.string() + ": need at least 2 frames, found " + std::to_string(files.size()));

    std::vector<Frame> frames;
    frames.reserve(files.size());
    for (const auto& f : files) {
        frames.push_back(load_frame(f));
        if (!frames.back().same_shape(frames.front()))
            throw ShapeError(dir.string() + ": " + f.filename().string() + " differs in dimensions from " +
                             files.front().filename().string());
    }
    return VideoClip(std::move(frames));
}

void save_clip(const VideoClip& clip, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    char name[32];
    for (int t = 0; t < clip.length(); ++t) {
        std::snprintf(name, sizeof name, "frame_%06d.png", t + 1);
        save_frame(clip[t], dir / name);
    }
}

}  // namespace dvp
