#include "rail/environments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace rail::env {

MazeLayout::MazeLayout(std::vector<std::string> rows) : rows_(std::move(rows)) {
    if (rows_.empty() || rows_.front().empty()) throw std::invalid_argument("maze layout is empty");
    for (const auto& r : rows_) {
        if (r.size() != rows_.front().size()) throw std::invalid_argument("maze layout rows differ in length");
    }
}

bool MazeLayout::wall(const Cell& c) const {
    if (c.first < 0 || c.second < 0 || c.first >= rows() || c.second >= cols()) return true;
    return rows_[static_cast<std::size_t>(c.first)][static_cast<std::size_t>(c.second)] == '#';
}

Cell MazeLayout::cell_of(const Eigen::Vector2d& p) {
    return {static_cast<int>(std::floor(p.y())), static_cast<int>(std::floor(p.x()))};
}

namespace {
const Cell kSteps[4] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
}

std::vector<Cell> MazeLayout::component(const Cell& from) const {
    std::vector<Cell> out;
    if (wall(from)) return out;
    std::vector<std::vector<char>> seen(static_cast<std::size_t>(rows()), std::vector<char>(static_cast<std::size_t>(cols()), 0));
    std::queue<Cell> open;
    open.push(from);
    seen[static_cast<std::size_t>(from.first)][static_cast<std::size_t>(from.second)] = 1;
    while (!open.empty()) {
        const Cell c = open.front();
        open.pop();
        out.push_back(c);
        for (const auto& d : kSteps) {
            const Cell n{c.first + d.first, c.second + d.second};
            if (wall(n)) continue;
            auto& s = seen[static_cast<std::size_t>(n.first)][static_cast<std::size_t>(n.second)];
            if (!s) {
                s = 1;
                open.push(n);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Cell> MazeLayout::shortest_path(const Cell& from, const Cell& to) const {
    if (wall(from) || wall(to)) return {};
    const auto h = [&](const Cell& c) { return std::abs(c.first - to.first) + std::abs(c.second - to.second); };
    using Entry = std::tuple<int, int, Cell>;  // f, g, cell
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    std::map<Cell, int> best;
    std::map<Cell, Cell> parent;
    open.emplace(h(from), 0, from);
    best[from] = 0;
    while (!open.empty()) {
        const auto [f, g, c] = open.top();
        open.pop();
        if (g > best[c]) continue;
        if (c == to) break;
        for (const auto& d : kSteps) {
            const Cell n{c.first + d.first, c.second + d.second};
            if (wall(n)) continue;
            const auto it = best.find(n);
            if (it != best.end() && it->second <= g + 1) continue;
            best[n] = g + 1;
            parent[n] = c;
            open.emplace(g + 1 + h(n), g + 1, n);
        }
    }
    if (!best.count(to)) return {};
    std::vector<Cell> path{to};
    while (path.back() != from) path.push_back(parent.at(path.back()));
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> MazeLayout::wall_runs() const {
    std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> runs;
    for (int r = 0; r < rows(); ++r) {
        int c = 0;
        while (c < cols()) {
            if (!wall({r, c})) {
                ++c;
                continue;
            }
            const int start = c;
            while (c < cols() && wall({r, c})) ++c;
            runs.emplace_back(Eigen::Vector2d(start, r), Eigen::Vector2d(c, r + 1));
        }
    }
    return runs;
}

Scene maze_scene(const MazeSpec& spec) {
    Scene s;
    for (const auto& [lo, hi] : spec.layout.wall_runs()) {
        s.obstacles.push_back({pz::Zonotope::box(0.5 * (lo + hi), 0.5 * (hi - lo)), true,
                               "wall@" + std::to_string(static_cast<int>(lo.y())) + "," +
                                   std::to_string(static_cast<int>(lo.x()))});
    }
    s.speed_limit = spec.speed_limit;
    s.goal = pz::Zonotope::box(MazeLayout::center(spec.goal), Eigen::Vector2d::Constant(spec.goal_tolerance));
    return s;
}

PointMassModel maze_model(const MazeSpec& spec) {
    return PointMassModel(2, spec.dt, Eigen::Vector2d::Constant(spec.accel), spec.radius);
}

MazeEnv::MazeEnv(MazeSpec spec, State start) : spec_(std::move(spec)), state_(std::move(start)) {
    if (state_.position.size() != 2 || state_.velocity.size() != 2) {
        throw std::invalid_argument("MazeEnv: state must be 2-D");
    }
    if (spec_.substeps < 1) throw std::invalid_argument("MazeEnv: need at least one substep");
}

bool MazeEnv::disc_collides(const Eigen::Vector2d& p) const {
    const Cell home = MazeLayout::cell_of(p);
    for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
            const Cell c{home.first + dr, home.second + dc};
            if (!spec_.layout.wall(c)) continue;
            const double x = std::clamp(p.x(), double(c.second), double(c.second + 1));
            const double y = std::clamp(p.y(), double(c.first), double(c.first + 1));
            if (std::hypot(p.x() - x, p.y() - y) <= spec_.radius) return true;
        }
    }
    return false;
}

StepEvent MazeEnv::step(const Action& a) {
    if (a.size() != 2 || !a.allFinite()) throw std::invalid_argument("MazeEnv: force must be a finite 2-vector");
    if ((a.array().abs() > spec_.accel * (1.0 + 1e-9)).any()) {
        throw std::invalid_argument("MazeEnv: force exceeds the actuator bound");
    }
    StepEvent ev;
    const Eigen::Vector2d p0 = state_.position, v0 = state_.velocity;
    for (int s = 1; s <= spec_.substeps; ++s) {
        const double u = spec_.dt * s / spec_.substeps;
        const Eigen::Vector2d p = p0 + v0 * u + 0.5 * a * u * u;
        const Eigen::Vector2d v = v0 + a * u;
        bool hit = false;
        if (!ev.collision && disc_collides(p)) {
            ev.collision = hit = true;
            ev.detail = "wall contact";
        }
        if (!ev.limit && v.norm() > spec_.speed_limit * (1.0 + 1e-9)) {
            ev.limit = hit = true;
            if (ev.detail.empty()) ev.detail = "speed limit";
        }
        if (hit && ev.substep < 0) ev.substep = s;
    }
    state_ = {state_.position + state_.velocity * spec_.dt + 0.5 * a * spec_.dt * spec_.dt, state_.velocity + a * spec_.dt};
    return ev;
}

bool MazeEnv::goal_reached() const {
    return (state_.position - MazeLayout::center(spec_.goal)).norm() <= spec_.goal_tolerance;
}

State sample_maze_start(const MazeSpec& spec, std::mt19937_64& rng) {
    auto cells = spec.layout.component(spec.goal);
    if (cells.empty()) throw std::invalid_argument("maze goal cell is a wall");
    if (cells.size() > 1) cells.erase(std::find(cells.begin(), cells.end(), spec.goal));
    const Cell c = cells[std::uniform_int_distribution<std::size_t>(0, cells.size() - 1)(rng)];
    std::uniform_real_distribution<double> jitter(-spec.start_jitter, spec.start_jitter);
    const double dx = jitter(rng), dy = jitter(rng);
    return {MazeLayout::center(c) + Eigen::Vector2d(dx, dy), Eigen::Vector2d::Zero()};
}

}  // namespace rail::env
