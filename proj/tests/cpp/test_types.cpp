#include <Eigen/Dense>

#include "doctest.h"
#include "rstv/types.hpp"

using namespace rstv;

TEST_CASE("block extraction covers every full window") {
    auto blocks = extract_blocks(50, 24);
    REQUIRE(blocks.size() == 27);
    CHECK(blocks.front().center == 11);
    CHECK(blocks.back().center == 37);
    CHECK(blocks.front().first() == 0);
    CHECK(blocks.front().last() == 23);
    CHECK(blocks.back().last() == 49);
    for (size_t i = 1; i < blocks.size(); ++i) {
        CHECK(blocks[i].center == blocks[i - 1].center + 1);
        CHECK(blocks[i].window == 24);
    }
}

TEST_CASE("block count is frames minus window plus one") {
    for (int n : {24, 30, 48, 101}) {
        for (int t : {2, 4, 24}) {
            auto blocks = extract_blocks(n, t);
            CHECK(blocks.size() == static_cast<size_t>(n - t + 1));
        }
    }
    CHECK_THROWS_AS(extract_blocks(10, 24), std::invalid_argument);
}

TEST_CASE("volume index members span first to last") {
    VolumeIndex idx{11, 4};
    CHECK(idx.first() == 10);
    CHECK(idx.last() == 13);
    auto m = idx.members();
    REQUIRE(m.size() == 4);
    CHECK(m.front() == 10);
    CHECK(m.back() == 13);
}

TEST_CASE("pose flattening round trips") {
    Mat3Xd coords(3, 3);
    coords << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    Pose3D p{coords};
    Eigen::VectorXd v = p.flatten();
    REQUIRE(v.size() == 9);
    CHECK(v(0) == 1);
    CHECK(v(1) == 2);
    CHECK(v(2) == 3);
    CHECK(v(3) == 4);
    Pose3D q = Pose3D::unflatten(v);
    CHECK((q.coords - coords).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("root relativize zeroes the root and is idempotent") {
    Mat3Xd coords(2, 3);
    coords << 10, 20, 30, 11, 22, 33;
    Pose3D p = root_relativize(coords, 0);
    CHECK(p.coords.row(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.coords(1, 0) == 1);
    CHECK(p.coords(1, 1) == 2);
    CHECK(p.coords(1, 2) == 3);
    Pose3D q = root_relativize(p.coords, 0);
    CHECK((q.coords - p.coords).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("default skeleton is a valid 17 joint tree") {
    SkeletonSpec s = SkeletonSpec::default17();
    s.validate();
    CHECK(s.joint_count == 17);
    CHECK(s.parent[0] == 0);  // root marks itself
    CHECK(!s.limbs.empty());
    for (auto [a, b] : s.limbs) {
        CHECK(a >= 0);
        CHECK(a < 17);
        CHECK(b >= 0);
        CHECK(b < 17);
        CHECK(a != b);
    }
}

TEST_CASE("volume indexing is t major then row then column") {
    Volume v(2, 3, 4);
    v.at(1, 2, 3) = 7.0;
    CHECK(v.data[1 * 3 * 4 + 2 * 4 + 3] == 7.0);
    CHECK(v.at(0, 0, 0) == 0.0);
    CHECK(v.size() == 24);
}
