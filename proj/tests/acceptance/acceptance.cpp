// End-to-end acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "rail/kinematics.hpp"
#include "rail/runner.hpp"
#include "unit/test_support.hpp"

using namespace rail;
using namespace rail::run;

namespace {

const std::string kConfigDir = RAIL_CONFIG_DIR;
const char* kScenes[] = {"maze_medium", "maze_large", "arm7"};

Scenario scene(const std::string& name) { return load_scenario(kConfigDir + "/" + name + ".json"); }

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("criterion %d: %s - %s: %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", title.c_str(),
                o.detail.c_str(), s);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// Reports gathered along the way for the metric identity check.
std::vector<std::pair<std::string, MetricsReport>> all_reports;

void collect(const std::string& tag, const BatchResult& b) {
    all_reports.emplace_back(tag + "/all", b.overall);
    for (const auto& [p, m] : b.per_policy) all_reports.emplace_back(tag + "/" + p, m);
}

// ---- 1 ----------------------------------------------------------------------

Outcome hard_constraints() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    std::ostringstream d;
    for (const char* name : kScenes) {
        RunOptions opt;
        opt.episodes = 100;
        opt.seeds = {1, 2, 3};
        opt.policies = {env::PolicyKind::Greedy, env::PolicyKind::Waypoint, env::PolicyKind::Adversarial};
        opt.workers = workers();
        const BatchResult b = run_batch(scene(name), opt);
        collect(std::string("rail/") + name, b);
        std::size_t unstartable = 0;
        for (const auto& e : b.episodes) unstartable += e.log.status == EpisodeStatus::Unstartable ? 1 : 0;
        d << name << " " << b.episodes.size() << " ep, violations " << b.overall.violation_transitions
          << " (col " << b.overall.collision_transitions << ", lim " << b.overall.limit_transitions
          << "), unstartable " << unstartable << "; ";
        o.pass = o.pass && b.overall.violation_transitions == 0 && unstartable == 0 && b.episodes.size() == 900;
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    d << "runtime " << fmt("%.1f", s) << " s (limit 600 s, " << workers() << " worker(s))";
    o.pass = o.pass && s < 600.0;
    o.detail = d.str();
    return o;
}

// ---- 2 ----------------------------------------------------------------------

Outcome unfiltered_contrast() {
    Outcome o;
    std::ostringstream d;
    for (const char* name : {"maze_medium", "maze_large"}) {
        for (auto kind : {env::PolicyKind::Greedy, env::PolicyKind::Adversarial}) {
            RunOptions opt;
            opt.mode = Mode::Unfiltered;
            opt.episodes = 100;
            opt.seeds = {1};
            opt.policies = {kind};
            opt.workers = workers();
            const BatchResult b = run_batch(scene(name), opt);
            collect(std::string("unfiltered/") + name, b);
            d << name << "/" << env::to_string(kind) << " col " << fmt("%.3f", b.overall.col_pct) << "%; ";
            o.pass = o.pass && b.overall.col_pct > 0.0;
        }
    }
    o.detail = d.str();
    return o;
}

// ---- 3 ----------------------------------------------------------------------

Outcome swept_soundness() {
    Outcome o;
    std::ostringstream d;
    for (const char* name : kScenes) {
        const SweptCheck c = verify_swept(scene(name), 10000, 2024);
        d << name << " " << c.samples << " samples, " << c.violations << " violations; ";
        o.pass = o.pass && c.samples == 10000 && c.violations == 0;
    }
    o.detail = d.str() + "tolerance 1e-9";
    return o;
}

// ---- 4 ----------------------------------------------------------------------

Outcome arc_refinement() {
    Outcome o;
    std::ostringstream d;
    for (double span : {M_PI / 2, M_PI / 4, M_PI / 8}) {
        double worst_ratio = 0.0;
        for (int k = 0; k < 16; ++k) {
            const double t0 = -M_PI + 2.0 * M_PI * k / 16.0;
            const double full = kin::arc_box(t0, t0 + span).volume();
            const double halves =
                kin::arc_box(t0, t0 + span / 2).volume() + kin::arc_box(t0 + span / 2, t0 + span).volume();
            worst_ratio = std::max(worst_ratio, halves / full);
            o.pass = o.pass && halves < full;
        }
        d << "span pi/" << fmt("%.0f", M_PI / span) << " halves/full <= " << fmt("%.4f", worst_ratio) << "; ";
    }
    o.detail = d.str();
    return o;
}

// ---- 5 ----------------------------------------------------------------------

Outcome set_arithmetic() {
    using namespace rail::testing;
    using namespace rail::pz;
    constexpr int kSamples = 10000;
    constexpr double kTol = 1e-10;
    std::mt19937_64 rng(55);
    int add_fail = 0, mul_fail = 0, cross_fail = 0, enclose_fail = 0;
    for (int i = 0; i < kSamples; ++i) {
        // fresh sets per sample, with partially shared ids
        const auto ids = fresh_ids(4);
        const std::vector<IndeterminateId> first(ids.begin(), ids.begin() + 3), last(ids.begin() + 1, ids.end());
        const PolyZonotope a = random_pz(rng, 3, 4, first), b = random_pz(rng, 3, 4, last);
        const MatrixPolyZonotope m = random_matrix_pz(rng, 3, 3, 3, last);
        const Assignment x = assign(ids, random_assignment(rng, 4));
        const Eigen::VectorXd av = a.evaluate(x), bv = b.evaluate(x);
        const double scale = 1.0 + av.norm() * bv.norm();
        if ((pz_add(a, b).evaluate(x) - (av + bv)).norm() > kTol * scale) ++add_fail;
        if ((pz_mul(m, a).evaluate(x) - m.evaluate(x) * av).norm() > kTol * scale) ++mul_fail;
        if ((pz_cross(a, b).evaluate(x) - Eigen::VectorXd(Eigen::Vector3d(av).cross(Eigen::Vector3d(bv)))).norm() >
            kTol * scale)
            ++cross_fail;
        const Zonotope z = pz_enclose(a);
        std::vector<double> coords;
        for (auto id : a.ids()) coords.push_back(x.at(id));
        if (!z.contains(av, kTol) || !enclosure_certificate(a, z, coords, kTol)) ++enclose_fail;
    }

    // zono_intersects against a grid brute force on the polygons.
    int agree = 0, decided = 0, excluded = 0;
    const double h = 0.02;
    for (int trial = 0; trial < 2000; ++trial) {
        const Zonotope a(random_vector(rng, 2, 1.0), Eigen::MatrixXd::Random(2, 3) * 0.5);
        const Zonotope b(random_vector(rng, 2, 1.0), Eigen::MatrixXd::Random(2, 2) * 0.5);
        const auto pa = zonotope_polygon(a), pb = zonotope_polygon(b);
        const auto grid_hit = [&](double grow) {
            const Eigen::Vector2d lo =
                (a.center() - a.half_widths()).cwiseMax(b.center() - b.half_widths()).array() - grow - h;
            const Eigen::Vector2d hi =
                (a.center() + a.half_widths()).cwiseMin(b.center() + b.half_widths()).array() + grow + h;
            for (double x = std::floor(lo.x() / h) * h; x <= hi.x(); x += h)
                for (double y = std::floor(lo.y() / h) * h; y <= hi.y(); y += h) {
                    const Eigen::Vector2d p(x, y);
                    if (polygon_contains(pa, p, grow) && polygon_contains(pb, p, grow)) return true;
                }
            return false;
        };
        const bool exact_hit = grid_hit(0.0);
        const bool grown_hit = grid_hit(h);
        if (!exact_hit && grown_hit) {
            ++excluded;  // within a grid step of touching
            continue;
        }
        ++decided;
        agree += exact_hit == zono_intersects(a, b) ? 1 : 0;
    }
    const double rate = decided ? static_cast<double>(agree) / decided : 0.0;
    Outcome o;
    o.pass = add_fail == 0 && mul_fail == 0 && cross_fail == 0 && enclose_fail == 0 && rate >= 0.999;
    std::ostringstream d;
    d << kSamples << " samples each: add " << add_fail << ", mul " << mul_fail << ", cross " << cross_fail
      << ", enclose " << enclose_fail << " failures (tol 1e-10); intersects agreement " << fmt("%.4f", rate)
      << " over " << decided << " pairs (" << excluded << " boundary pairs excluded)";
    o.detail = d.str();
    return o;
}

// ---- 6 ----------------------------------------------------------------------

struct ReplayResult {
    bool safe = true;
    double terminal_speed = 0.0;
};

ReplayResult replay_dense(const Scenario& s, const BackupPlan& plan) {
    ReplayResult r;
    std::unique_ptr<EnvironmentPort> e;
    if (s.kind == EnvKind::Maze) {
        env::MazeSpec spec = s.maze;
        spec.substeps = 200;
        e = std::make_unique<env::MazeEnv>(spec, plan.origin);
    } else {
        env::ArmSpec spec = s.arm;
        spec.substeps = 200;
        e = std::make_unique<env::ArmEnv>(spec, plan.origin.position);
    }
    for (const auto& a : plan.actions) r.safe = r.safe && !e->step(a).violation();
    r.terminal_speed = std::max(plan.states.back().velocity.norm(), plan.actions.empty() ? 0.0 : e->observe().velocity.norm());
    return r;
}

Outcome backup_certification() {
    Outcome o;
    std::ostringstream d;
    for (const char* name : kScenes) {
        const Scenario s = scene(name);
        std::size_t plans = 0, unsafe = 0, moving = 0, rest_fail = 0, spawns = 0;
        double worst_speed = 0.0;
        for (std::size_t index = 0; index < 100; ++index) {
            // From rest at every spawn: k = 0 must certify.
            EpisodeSetup setup = make_episode(s, env::PolicyKind::Greedy, 1, index);
            const BackupOptions opt = s.filter.backup_options(setup.model->dt());
            ++spawns;
            if (!solve_backup(setup.start, {}, setup.scene, *setup.model, opt)) ++rest_fail;
        }
        // Backups from states visited by rail episodes, with the policy's own tail.
        for (auto kind : {env::PolicyKind::Greedy, env::PolicyKind::Adversarial, env::PolicyKind::DemoReplay}) {
            for (std::size_t index = 0; index < 4; ++index) {
                const EpisodeResult ep = run_episode(s, Mode::Rail, kind, 9, index);
                EpisodeSetup setup = make_episode(s, kind, 9, index);
                const BackupOptions opt = s.filter.backup_options(setup.model->dt());
                for (const auto& rec : ep.log.records) {
                    const Plan p = setup.policy->plan(rec.state, 0.0, s.filter.tp);
                    const auto plan = solve_backup(rec.state, p.actions, setup.scene, *setup.model, opt);
                    if (!plan) continue;
                    ++plans;
                    moving += rec.state.velocity.norm() > 1e-6 ? 1 : 0;
                    const ReplayResult r = replay_dense(s, *plan);
                    unsafe += r.safe ? 0 : 1;
                    worst_speed = std::max(worst_speed, r.terminal_speed);
                }
            }
        }
        d << name << " " << plans << " plans (" << moving << " from motion), " << unsafe << " unsafe, terminal speed <= "
          << fmt("%.1e", worst_speed) << ", rest failures " << rest_fail << "/" << spawns << "; ";
        o.pass = o.pass && plans > 0 && unsafe == 0 && worst_speed <= 1e-9 && rest_fail == 0;
    }
    o.detail = d.str();
    return o;
}

// ---- 7 ----------------------------------------------------------------------

Outcome latency() {
    const Scenario s = scene("arm7");
    const MetricsReport m = bench(s, 3, 1);
    Outcome o;
    o.pass = s.filter.tp == 32 && s.filter.partitions == 16 && m.validation_samples > 0 && m.validation_mean <= 0.5;
    o.detail = "arm7 Tp " + std::to_string(s.filter.tp) + ", m " + std::to_string(s.filter.partitions) +
               ": validation " + fmt("%.4f", m.validation_mean) + " +- " + fmt("%.4f", m.validation_std) + " s over " +
               std::to_string(m.validation_samples) + " filter steps (limit 0.5 s)";
    return o;
}

// ---- 8 ----------------------------------------------------------------------

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Outcome determinism() {
    Outcome o;
    std::ostringstream d;
    const auto root = std::filesystem::temp_directory_path() / "rail_acceptance";
    for (const char* name : kScenes) {
        RunOptions opt;
        opt.episodes = 10;
        opt.seeds = {4, 5};
        opt.policies = {env::PolicyKind::Greedy, env::PolicyKind::Waypoint, env::PolicyKind::Adversarial,
                        env::PolicyKind::DemoReplay};
        const Scenario s = scene(name);
        opt.workers = 1;
        const BatchResult a = run_batch(s, opt);
        opt.workers = workers() > 1 ? workers() : 2;
        const BatchResult b = run_batch(s, opt);
        collect(std::string("determinism/") + name, a);
        write_outputs(a, (root / name / "a").string(), false);
        write_outputs(b, (root / name / "b").string(), false);
        const std::string la = read_file(root / name / "a" / "episodes.jsonl");
        const std::string lb = read_file(root / name / "b" / "episodes.jsonl");
        const bool same = !la.empty() && la == lb;
        d << name << " " << la.size() << " bytes " << (same ? "identical" : "DIFFERENT") << "; ";
        o.pass = o.pass && same;
    }
    std::filesystem::remove_all(root);
    o.detail = d.str();
    return o;
}

// ---- 9 ----------------------------------------------------------------------

Outcome identities() {
    Outcome o;
    std::size_t broken = 0;
    std::string first;
    for (const auto& [tag, m] : all_reports) {
        const bool ok = m.ssucc_pct <= m.succ_pct && (m.col_pct != 0.0 || m.ssucc_pct == m.succ_pct) &&
                        m.identities_hold();
        if (!ok) {
            ++broken;
            if (first.empty()) first = tag;
        }
    }
    o.pass = !all_reports.empty() && broken == 0;
    o.detail = std::to_string(all_reports.size()) + " reports checked, " + std::to_string(broken) + " broken" +
               (first.empty() ? "" : " (first: " + first + ")");
    return o;
}

}  // namespace

int main() {
    report(1, "zero ground-truth violations in rail mode", hard_constraints);
    report(2, "unfiltered policies collide in walled scenes", unfiltered_contrast);
    report(3, "swept-volume containment", swept_soundness);
    report(4, "arc box refinement", arc_refinement);
    report(5, "set arithmetic against sampling oracles", set_arithmetic);
    report(6, "backup plans under dense replay", backup_certification);
    report(7, "arm validation latency", latency);
    report(8, "byte-identical episode logs", determinism);
    report(9, "metric identities", identities);
    std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
