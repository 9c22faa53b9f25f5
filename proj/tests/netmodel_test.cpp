#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "vstab/admittance.hpp"
#include "vstab/cdf.hpp"
#include "vstab/sidecar.hpp"
#include "vstab/topology.hpp"
#include "vstab/transforms.hpp"

using namespace vstab;
using namespace vstab::testing;

namespace {

const char* kTwoBusCdf =
    " 01/01/99 HAND WRITTEN        100.0 1999 S two bus\n"
    "BUS DATA FOLLOWS                             2 ITEMS\n"
    "   1 Slack       HV  1  1  3 1.000    0.0      0.0      0.0      0.0     0.0   0.0  "
    "1.000     0.0     0.0   0.0    0.0        0\n"
    "   2 Load        HV  1  1  0 1.000    0.0     80.0     30.0      0.0     0.0   0.0  "
    "0.0       0.0     0.0   0.0    0.0        0\n"
    "-999\n"
    "BRANCH DATA FOLLOWS                          1 ITEMS\n"
    "   1    2 1  1 1 0  0.0       0.1        0.0        0     0     0    0 0  0.0     0.0"
    "    0.0     0.0     0.0    0.0    0.0\n"
    "-999\n"
    "END OF DATA\n";

std::vector<int> eligible_ids(const NetworkCase& net) {
    std::vector<int> ids;
    for (const auto& br : net.branches)
        if (br.outage_eligible) ids.push_back(br.id);
    return ids;
}

}  // namespace

TEST(ParseCase, Ieee14Archive) {
    NetworkCase net = parse_case(slurp(data_path("ieee14.cdf")));
    EXPECT_EQ(net.buses.size(), 14u);
    EXPECT_EQ(net.branches.size(), 20u);
    EXPECT_EQ(net.loads.size(), 11u);
    EXPECT_EQ(net.load_bus_ids().size(), 11u);
    EXPECT_NEAR(net.total_scalable_load_mw(), 259.0, 1e-12);
    EXPECT_EQ(net.base_mva, 100.0);
    EXPECT_EQ(net.slack_bus_id(), 1);

    // archive condensers carry zero scheduled MW on regulated buses
    for (int b : {3, 6, 8})
        EXPECT_EQ(net.machines_at(b).at(0)->kind, MachineKind::SyncCondenser) << "bus " << b;
    EXPECT_EQ(net.machines_at(2).at(0)->kind, MachineKind::SyncGen);
    EXPECT_DOUBLE_EQ(net.machines_at(2).at(0)->p_set, 40.0);
    EXPECT_DOUBLE_EQ(net.machines_at(2).at(0)->q_max, 50.0);
    EXPECT_DOUBLE_EQ(net.machines_at(2).at(0)->q_min, -40.0);
    EXPECT_DOUBLE_EQ(net.bus(9).shunt_b, 0.19);

    int transformers = 0;
    for (const auto& br : net.branches) transformers += br.is_transformer;
    EXPECT_EQ(transformers, 3);
    EXPECT_DOUBLE_EQ(net.branches[7].tap_ratio, 0.978);  // 4-7
}

TEST(ParseCase, PaperCaseViaSidecar) {
    NetworkCase net = load_ieee14();
    EXPECT_EQ(net.branches.size(), 21u);  // 1-2 split into two circuits

    auto ids = eligible_ids(net);
    ASSERT_EQ(ids.size(), 16u);
    const std::vector<std::string> expected = {
        "Line_0001_0002/1", "Line_0001_0002/2", "Line_0001_0005", "Line_0002_0003",
        "Line_0002_0004",   "Line_0002_0005",   "Line_0003_0004", "Line_0004_0005",
        "Line_0006_0011",   "Line_0006_0012",   "Line_0006_0013", "Line_0009_0010",
        "Line_0009_0014",   "Line_0010_0011",   "Line_0012_0013", "Line_0013_0014"};
    std::vector<std::string> labels;
    for (const auto& br : net.branches)
        if (br.outage_eligible) labels.push_back(branch_label(net, br));
    EXPECT_EQ(labels, expected);

    // the split pair aggregates back to the archive branch
    const Branch& c1 = net.branch(*find_branch_by_label(net, "Line_0001_0002/1"));
    const Branch& c2 = net.branch(*find_branch_by_label(net, "Line_0001_0002/2"));
    EXPECT_DOUBLE_EQ(c1.r, 2 * 0.01938);
    EXPECT_DOUBLE_EQ(c1.x, 2 * 0.05917);
    EXPECT_DOUBLE_EQ(c1.b_charging, 0.0528 / 2);
    EXPECT_EQ(c1.r, c2.r);
    EXPECT_EQ(c1.x, c2.x);

    // transformers and station branches stay in the model but are never outaged
    for (const char* label : {"Trafo_0004_0007", "Trafo_0004_0009", "Trafo_0005_0006",
                              "Line_0007_0008", "Line_0007_0009"}) {
        auto id = find_branch_by_label(net, label);
        ASSERT_TRUE(id.has_value()) << label;
        EXPECT_FALSE(net.branch(*id).outage_eligible) << label;
    }

    for (int b : {3, 6, 8})
        EXPECT_EQ(net.machines_at(b).at(0)->kind, MachineKind::SyncCondenser);
    EXPECT_DOUBLE_EQ(net.machines_at(6).at(0)->v_set, 1.07);
}

TEST(ParseCase, HandWrittenTwoBus) {
    NetworkCase net = parse_case(kTwoBusCdf);
    ASSERT_EQ(net.buses.size(), 2u);
    ASSERT_EQ(net.branches.size(), 1u);
    EXPECT_EQ(net.buses[0].kind, BusKind::Slack);
    EXPECT_EQ(net.buses[1].kind, BusKind::PQ);
    EXPECT_DOUBLE_EQ(net.branches[0].r, 0.0);
    EXPECT_DOUBLE_EQ(net.branches[0].x, 0.1);
    EXPECT_DOUBLE_EQ(net.load_p_mw(2), 80.0);
    EXPECT_DOUBLE_EQ(net.load_q_mvar(2), 30.0);
    EXPECT_TRUE(net.machines.empty());
}

TEST(ParseCase, EmptyBusSectionIsStructural) {
    const char* text =
        " 01/01/99 EMPTY               100.0 1999 S empty\n"
        "BUS DATA FOLLOWS 0 ITEMS\n"
        "-999\n"
        "BRANCH DATA FOLLOWS 0 ITEMS\n"
        "-999\n"
        "END OF DATA\n";
    EXPECT_THROW(
        {
            try {
                parse_case(text);
            } catch (const StructureError& e) {
                EXPECT_NE(std::string(e.what()).find("no slack bus"), std::string::npos);
                throw;
            }
        },
        StructureError);
}

TEST(ParseCase, MalformedRecordReportsLine) {
    std::string text = kTwoBusCdf;
    auto pos = text.find("   2 Load");
    text.replace(text.find("80.0", pos), 4, "8o.0");
    try {
        parse_case(text);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 4);
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    }
}

TEST(ParseCase, DuplicateBusIdIsStructural) {
    std::string text = kTwoBusCdf;
    auto pos = text.find("   2 Load");
    text.replace(pos, 4, "   1");
    EXPECT_THROW(parse_case(text), StructureError);
}

TEST(ParseCase, SerializeRoundTrip) {
    NetworkCase first = parse_case(slurp(data_path("ieee14.cdf")));
    NetworkCase second = parse_case(write_cdf(first));
    EXPECT_EQ(first, second);

    // a case holding parallel circuits keeps its circuit ids through the trip
    NetworkCase split = split_parallel_circuit(first, first.branches[0].id);
    NetworkCase again = parse_case(write_cdf(split));
    ASSERT_EQ(again.branches.size(), split.branches.size());
    EXPECT_EQ(again.branches[0].circuit_id, "1");
    EXPECT_EQ(again.branches[1].circuit_id, "2");
    for (std::size_t i = 0; i < split.branches.size(); ++i) {
        EXPECT_DOUBLE_EQ(again.branches[i].r, split.branches[i].r);
        EXPECT_DOUBLE_EQ(again.branches[i].x, split.branches[i].x);
        EXPECT_DOUBLE_EQ(again.branches[i].b_charging, split.branches[i].b_charging);
        EXPECT_EQ(again.branches[i].from_bus, split.branches[i].from_bus);
        EXPECT_EQ(again.branches[i].to_bus, split.branches[i].to_bus);
    }
}

TEST(Admittance, SingleLineStamp) {
    NetworkCase net = two_bus_case(0.1, 0.0, 0.0);
    AdmittanceMatrix y = build_admittance(net, {});
    EXPECT_NEAR(std::abs(y.y.coeff(0, 1) - Complex(0, 10)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(y.y.coeff(1, 0) - Complex(0, 10)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(y.y.coeff(0, 0) - Complex(0, -10)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(y.y.coeff(1, 1) - Complex(0, -10)), 0.0, 1e-12);
}

TEST(Admittance, OutagedLineLeavesEmptyNetwork) {
    NetworkCase net = two_bus_case(0.1, 0.0, 0.0);
    AdmittanceMatrix y = build_admittance(net, {1});
    EXPECT_EQ(std::abs(y.y.coeff(0, 1)), 0.0);
    EXPECT_EQ(std::abs(y.y.coeff(1, 0)), 0.0);
    EXPECT_EQ(std::abs(y.y.coeff(0, 0)), 0.0);
}

TEST(Admittance, RowSumIdentityOnPaperCase) {
    NetworkCase net = load_ieee14();
    AdmittanceMatrix y = build_admittance(net, {});
    const int n = y.size();
    // expected row sums recomputed directly from the branch list
    std::vector<Complex> expected(n, Complex(0, 0));
    for (const auto& br : net.branches) {
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const Complex ysh(0.0, br.b_charging / 2.0);
        const double a = br.tap_ratio;
        expected[y.index_of_bus.at(br.from_bus)] += (ys + ysh) / (a * a) - ys / a;
        expected[y.index_of_bus.at(br.to_bus)] += ys + ysh - ys / a;
    }
    for (int i = 0; i < n; ++i)
        expected[i] += Complex(net.buses[i].shunt_g, net.buses[i].shunt_b);
    for (int i = 0; i < n; ++i) {
        Complex row_sum(0, 0);
        for (Eigen::SparseMatrix<Complex, Eigen::RowMajor>::InnerIterator it(y.y, i); it; ++it)
            row_sum += it.value();
        EXPECT_NEAR(std::abs(row_sum - expected[i]), 0.0, 1e-12) << "row " << i;
    }
}

TEST(Admittance, OutageEqualsDeletion) {
    NetworkCase net = load_ieee14();
    std::mt19937 rng(20240811);
    std::vector<int> ids;
    for (const auto& br : net.branches) ids.push_back(br.id);
    for (int trial = 0; trial < 50; ++trial) {
        std::set<int> outages;
        std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
        int count = 1 + static_cast<int>(trial % 3);
        for (int k = 0; k < count; ++k) outages.insert(ids[pick(rng)]);

        NetworkCase deleted = net;
        std::erase_if(deleted.branches,
                      [&](const Branch& br) { return outages.count(br.id) > 0; });
        AdmittanceMatrix ya = build_admittance(net, outages);
        AdmittanceMatrix yb = build_admittance(deleted, {});
        Eigen::SparseMatrix<Complex, Eigen::RowMajor> diff = ya.y - yb.y;
        for (int i = 0; i < diff.outerSize(); ++i)
            for (Eigen::SparseMatrix<Complex, Eigen::RowMajor>::InnerIterator it(diff, i); it;
                 ++it)
                EXPECT_LT(std::abs(it.value()), 1e-12);
    }
}

TEST(Admittance, UnknownOutageIdRejected) {
    NetworkCase net = two_bus_case(0.1, 0.0, 0.0);
    EXPECT_THROW(build_admittance(net, {99}), StructureError);
}

TEST(Connectivity, BaseCaseIsOneIsland) {
    NetworkCase net = load_ieee14();
    IslandReport rep = check_connectivity(net, {});
    ASSERT_EQ(rep.islands.size(), 1u);
    EXPECT_EQ(rep.islands[0].size(), 14u);
    EXPECT_TRUE(rep.slack_island_index.has_value());
    EXPECT_TRUE(rep.disconnected_load_buses.empty());
}

TEST(Connectivity, TwoBusSplit) {
    NetworkCase net = two_bus_case(0.1, 50.0, 0.0);
    IslandReport rep = check_connectivity(net, {1});
    ASSERT_EQ(rep.islands.size(), 2u);
    EXPECT_EQ(rep.disconnected_load_buses, std::set<int>{2});
}

TEST(Connectivity, SlackIslandedByTripleOutage) {
    NetworkCase net = load_ieee14();
    std::set<int> outages;
    for (const char* label : {"Line_0001_0002/1", "Line_0001_0002/2", "Line_0001_0005"})
        outages.insert(*find_branch_by_label(net, label));
    IslandReport rep = check_connectivity(net, outages);
    ASSERT_TRUE(rep.slack_island_index.has_value());
    EXPECT_EQ(rep.slack_island(), std::set<int>{1});
    EXPECT_EQ(rep.disconnected_load_buses.size(), 11u);
}

TEST(Connectivity, IslandsPartitionBusesForRandomPairs) {
    NetworkCase net = load_ieee14();
    std::vector<int> ids;
    for (const auto& br : net.branches) ids.push_back(br.id);
    std::mt19937 rng(7);
    std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
    std::set<int> all_buses;
    for (const auto& b : net.buses) all_buses.insert(b.id);
    for (int trial = 0; trial < 1000; ++trial) {
        std::set<int> outages{ids[pick(rng)], ids[pick(rng)]};
        IslandReport rep = check_connectivity(net, outages);
        std::set<int> seen;
        std::size_t total = 0;
        for (const auto& island : rep.islands) {
            total += island.size();
            seen.insert(island.begin(), island.end());
        }
        ASSERT_EQ(seen, all_buses);
        ASSERT_EQ(total, all_buses.size());  // disjoint given the union matches
    }
}

TEST(ScMode, EnabledKeepsCondenserBusesPv) {
    NetworkCase net = apply_sc_mode(load_ieee14(), true);
    for (int b : {3, 6, 8}) {
        EXPECT_EQ(net.bus(b).kind, BusKind::PV);
        const Machine* m = net.machines_at(b).at(0);
        EXPECT_EQ(m->kind, MachineKind::SyncCondenser);
        EXPECT_DOUBLE_EQ(m->p_set, 0.0);
    }
}

TEST(ScMode, DisabledRemovesCondensersAndDemotesBuses) {
    NetworkCase base = load_ieee14();
    NetworkCase net = apply_sc_mode(base, false);
    EXPECT_EQ(net.machines.size(), base.machines.size() - 3);
    for (int b : {3, 6, 8}) {
        EXPECT_EQ(net.bus(b).kind, BusKind::PQ);
        EXPECT_TRUE(net.machines_at(b).empty());
    }
    EXPECT_EQ(net.bus(2).kind, BusKind::PV);  // generator untouched
}

TEST(ScMode, NoCondenserCaseIsIdentity) {
    NetworkCase net = two_bus_case(0.1, 50.0, 10.0);
    EXPECT_EQ(apply_sc_mode(net, false), net);
    EXPECT_EQ(apply_sc_mode(net, true), net);
}

TEST(ScaleLoads, ZeroDeltaIsIdentity) {
    NetworkCase net = load_ieee14();
    EXPECT_EQ(scale_loads(net, 0.0), net);
}

TEST(ScaleLoads, DoublingThePaperCase) {
    NetworkCase net = load_ieee14();
    NetworkCase doubled = scale_loads(net, 259.0);
    EXPECT_NEAR(doubled.total_scalable_load_mw(), 518.0, 1e-9);
    for (std::size_t i = 0; i < net.loads.size(); ++i) {
        EXPECT_NEAR(doubled.loads[i].p, 2.0 * net.loads[i].p, 1e-12);
        EXPECT_NEAR(doubled.loads[i].q, 2.0 * net.loads[i].q, 1e-12);
    }
}

TEST(ScaleLoads, ConstantPowerFactorOnSingleLoad) {
    NetworkCase net = two_bus_case(0.1, 100.0, 50.0);
    NetworkCase grown = scale_loads(net, 10.0);
    EXPECT_NEAR(grown.loads[0].p, 110.0, 1e-12);
    EXPECT_NEAR(grown.loads[0].q, 55.0, 1e-12);
    NetworkCase p_only = scale_loads(net, 10.0, LoadGrowth::ActiveOnly);
    EXPECT_NEAR(p_only.loads[0].p, 110.0, 1e-12);
    EXPECT_NEAR(p_only.loads[0].q, 50.0, 1e-12);
}

TEST(ScaleLoads, NoScalableLoadIsAnError) {
    NetworkCase net = two_bus_case(0.1, 0.0, 0.0);
    EXPECT_THROW(scale_loads(net, 5.0), InfeasibleError);
    NetworkCase frozen = two_bus_case(0.1, 50.0, 0.0);
    frozen.loads[0].scalable = false;
    EXPECT_THROW(scale_loads(frozen, 5.0), InfeasibleError);
}

TEST(ScaleLoads, GrowthComposes) {
    NetworkCase net = load_ieee14();
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> delta(0.0, 200.0);
    for (int trial = 0; trial < 25; ++trial) {
        double a = delta(rng), b = delta(rng);
        NetworkCase two_step = scale_loads(scale_loads(net, a), b);
        NetworkCase one_step = scale_loads(net, a + b);
        for (std::size_t i = 0; i < net.loads.size(); ++i) {
            EXPECT_NEAR(two_step.loads[i].p / net.base_mva,
                        one_step.loads[i].p / net.base_mva, 1e-9);
            EXPECT_NEAR(two_step.loads[i].q / net.base_mva,
                        one_step.loads[i].q / net.base_mva, 1e-9);
        }
    }
}

TEST(Sidecar, UnknownMachineKindRejected) {
    EXPECT_THROW(parse_sidecar("[[machine]]\nbus = 1\nkind = \"fusion\"\n"), ParseError);
}

TEST(Sidecar, UnresolvedLabelRejected) {
    NetworkCase net = parse_case(slurp(data_path("ieee14.cdf")));
    SidecarConfig cfg;
    cfg.outage_eligible = {"Line_0042_0043"};
    EXPECT_THROW(apply_sidecar(net, cfg), StructureError);
}
