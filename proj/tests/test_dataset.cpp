#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "eventline/dataset.hpp"

using namespace eventline;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const char* name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    return p.string();
}

double point_segment_distance(double px, double py, double x0, double y0, double x1, double y1) {
    const double vx = x1 - x0, vy = y1 - y0;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((px - x0) * vx + (py - y0) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (x0 + t * vx), py - (y0 + t * vy));
}

} // namespace

TEST_CASE("dataset table carries the published training parameters") {
    const DatasetSpec& poker = dataset_spec("pokerdvs");
    CHECK(poker.geometry == SensorGeometry{35, 35});
    CHECK(poker.n_labels == 4);
    CHECK(poker.train_count == 48);
    CHECK(poker.test_count == 12);
    CHECK(poker.keep_us == 10000);
    CHECK(poker.batch_size == 8);
    CHECK(poker.classifier_threshold == 5.0);

    const DatasetSpec& nmnist = dataset_spec("nmnist");
    CHECK(nmnist.geometry == SensorGeometry{34, 34});
    CHECK(nmnist.n_labels == 10);
    CHECK(nmnist.batch_size == 128);
    CHECK(nmnist.classifier_threshold == 25.0);

    const DatasetSpec& gesture = dataset_spec("dvsgesture");
    CHECK(gesture.geometry == SensorGeometry{128, 128});
    CHECK(gesture.n_labels == 11);
    CHECK(gesture.keep_us == 1000000);

    CHECK(has_dataset_spec("synth-poker"));
    CHECK(has_dataset_spec("synth-nmnist"));
    CHECK_FALSE(has_dataset_spec("cifar10"));
    CHECK_THROWS_AS(dataset_spec("cifar10"), std::invalid_argument);
}

TEST_CASE("atis reader decodes the 40-bit record layout") {
    // byte0 = x, byte1 = y, byte2 bit7 = polarity, byte2 low bits + bytes 3-4
    // form a big-endian 23-bit microsecond timestamp
    const unsigned char bytes[] = {
        // (5, 7), ON, t = 0x012345
        5, 7, 0x81, 0x23, 0x45,
        // (33, 0), OFF, t = 0x000002
        33, 0, 0x00, 0x00, 0x02,
        // (9, 9), ON, t = 0x7fffff (max representable)
        9, 9, 0xff, 0xff, 0xff,
    };
    const std::string path = (fs::temp_directory_path() / "atis_fixture.bin").string();
    {
        std::ofstream f(path, std::ios::binary);
        f.write(reinterpret_cast<const char*>(bytes), sizeof(bytes));
    }
    const EventSample s = read_atis_bin(path, {34, 34});
    REQUIRE(s.events.size() == 3);
    // records come back time-sorted
    CHECK(s.events[0] == Event{33, 0, 0x000002, 0});
    CHECK(s.events[1] == Event{5, 7, 0x012345, 1});
    CHECK(s.events[2] == Event{9, 9, 0x7fffff, 1});
    CHECK(s.duration_us == 0x7fffff + 1);

    std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(bytes), 7);
    CHECK_THROWS_WITH_AS(read_atis_bin(path, {34, 34}), doctest::Contains("truncated"),
                         std::runtime_error);
    fs::remove(path);
}

TEST_CASE("atis reader rejects coordinates outside the sensor") {
    const unsigned char bytes[] = {40, 2, 0x80, 0x00, 0x01};
    const std::string path = (fs::temp_directory_path() / "atis_oob.bin").string();
    std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(bytes), 5);
    CHECK_THROWS_WITH_AS(read_atis_bin(path, {34, 34}), doctest::Contains("outside sensor"),
                         std::runtime_error);
    fs::remove(path);
}

TEST_CASE("canonicalize denoises then crops to the nominal duration") {
    EventSample raw;
    raw.geometry = {8, 8};
    raw.duration_us = 50000;
    raw.events = {
        {7, 0, 100, 1},   // isolated, removed by denoise
        {2, 2, 1000, 1},  // first of a cluster, removed (nothing precedes it)
        {3, 2, 1500, 1},  // kept, neighbour within window
        {3, 3, 2200, 0},  // kept
        {2, 3, 30000, 1}, // removed: nearest neighbour activity is 27.8 ms old
    };
    const EventSample out = canonicalize(raw, 10000, 10000);
    REQUIRE(out.events.size() == 2);
    // rebased to the first kept event, cropped to 10 ms
    CHECK(out.events[0] == Event{3, 2, 0, 1});
    CHECK(out.events[1] == Event{3, 3, 700, 0});
    CHECK(out.duration_us == 10000);
}

TEST_CASE("moving-line generator stays near its ground truth") {
    const SensorGeometry g{64, 64};
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        LineTruth truth;
        const EventSample s = synth_moving_line(g, Side::Left, 10, Side::Right, 50, 10000, 2e5,
                                                seed, &truth);
        CHECK(s.events.size() == 2000);
        CHECK(truth.x0 == 0.0);
        CHECK(truth.x1 == 63.0);
        CHECK(truth.y0 == 10.0);
        CHECK(truth.y1 == 50.0);
        size_t near = 0;
        for (const Event& e : s.events) {
            if (point_segment_distance(e.x, e.y, truth.x0, truth.y0, truth.x1, truth.y1) <= 1.0) {
                ++near;
            }
        }
        CHECK(double(near) >= 0.95 * double(s.events.size()));
        s.validate();
    }
    CHECK_THROWS_AS(synth_moving_line(g, Side::Top, 3, Side::Top, 3, 1000, 1e5, 1),
                    std::invalid_argument);
}

TEST_CASE("synthetic class fixtures are labelled, valid and deterministic") {
    const auto pips = synth_pip_dataset(12, 99);
    REQUIRE(pips.size() == 12);
    std::set<int> labels;
    for (const auto& s : pips) {
        s.validate();
        CHECK(s.geometry == SensorGeometry{35, 35});
        CHECK(s.duration_us == 10000);
        REQUIRE(s.label.has_value());
        labels.insert(*s.label);
    }
    CHECK(labels == std::set<int>{0, 1, 2, 3});

    const auto digits = synth_digit_dataset(20, 5);
    REQUIRE(digits.size() == 20);
    for (size_t i = 0; i < digits.size(); ++i) {
        digits[i].validate();
        CHECK(digits[i].geometry == SensorGeometry{34, 34});
        CHECK(*digits[i].label == int(i % 10));
    }

    const auto again = synth_digit_dataset(20, 5);
    for (size_t i = 0; i < digits.size(); ++i) {
        CHECK(digits[i].events == again[i].events);
    }
    const auto other_seed = synth_digit_dataset(20, 6);
    CHECK(digits[0].events != other_seed[0].events);

    const auto pair = synth_two_class({16, 16}, 8, 1);
    for (size_t i = 0; i < pair.size(); ++i) {
        pair[i].validate();
        CHECK(*pair[i].label == int(i % 2));
    }
}

TEST_CASE("data directory round-trips samples, labels and metadata") {
    const std::string dir = temp_dir("evtest_datadir");
    auto samples = synth_two_class({16, 16}, 10, 42);
    std::vector<EventSample> train(samples.begin(), samples.begin() + 8);
    std::vector<EventSample> test(samples.begin() + 8, samples.end());

    DataDirInfo info;
    info.name = "toy";
    info.kind = "raw";
    info.geometry = {16, 16};
    info.n_labels = 2;
    info.channels = 2;
    info.keep_us = 10000;
    info.denoise_window_us = 0;
    info.provenance = "generated for the round-trip test";
    save_data_dir(dir, info, train, test);

    const LoadedData back = load_data_dir(dir);
    CHECK(back.info.name == "toy");
    CHECK(back.info.kind == "raw");
    CHECK(back.info.geometry == SensorGeometry{16, 16});
    CHECK(back.info.n_labels == 2);
    CHECK(back.info.samples.size() == 10);
    REQUIRE(back.train.size() == 8);
    REQUIRE(back.test.size() == 2);
    for (size_t i = 0; i < back.train.size(); ++i) {
        CHECK(back.train[i].events == train[i].events);
        CHECK(back.train[i].label == train[i].label);
        CHECK(back.train[i].duration_us == train[i].duration_us);
    }
    CHECK_FALSE(back.manifest_hash.empty());

    // identical content reloads to the identical manifest hash
    const LoadedData back2 = load_data_dir(dir);
    CHECK(back2.manifest_hash == back.manifest_hash);

    // changing content changes the hash
    const std::string dir2 = temp_dir("evtest_datadir2");
    train[0].events[0].t += 1;
    save_data_dir(dir2, info, train, test);
    CHECK(load_data_dir(dir2).manifest_hash != back.manifest_hash);

    // a sample file edited behind the manifest's back is rejected by its digest
    {
        const std::string victim = dir2 + "/train/00001.evt";
        std::fstream f(victim, std::ios::in | std::ios::out | std::ios::binary);
        REQUIRE(f.is_open());
        f.seekp(-1, std::ios::end);
        char last = 0;
        f.seekg(-1, std::ios::end);
        f.get(last);
        f.seekp(-1, std::ios::end);
        f.put(char(last ^ 0x01));
        f.close();
        CHECK_THROWS_WITH_AS(load_data_dir(dir2), doctest::Contains("digest"),
                             std::runtime_error);
    }

    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST_CASE("load_data_dir reports a missing directory") {
    CHECK_THROWS_AS(load_data_dir("/nonexistent/evtest_nowhere"), std::exception);
}
