#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rail/backup_planner.hpp"
#include "rail/collision.hpp"
#include "rail/system_model.hpp"

namespace rail {

/// Observations carry the full state, so state estimation is the identity.
using Observation = State;

/// A proposed action sequence with uniform timestamps t0 + k dt.
struct Plan {
    std::vector<Action> actions;
    double t0 = 0.0;
    double dt = 0.0;

    std::size_t size() const { return actions.size(); }
    std::vector<Action> head(std::size_t ta) const;
    std::vector<Action> tail(std::size_t ta) const;
    /// Throws unless 1 <= ta <= tp, the plan has exactly tp finite actions and dt > 0.
    void validate(std::size_t ta, std::size_t tp) const;
};

/// Nominal policy: observation to a plan of exactly `horizon` actions.
class PolicyPort {
public:
    virtual ~PolicyPort() = default;
    virtual Plan plan(const Observation& o, double time, std::size_t horizon) = 0;
    virtual std::string name() const = 0;
};

/// Ground-truth outcome of one control step.
struct StepEvent {
    bool collision = false;
    bool limit = false;
    int substep = -1;  ///< first offending substep, -1 if none
    std::string detail;

    bool violation() const { return collision || limit; }
};

/// Simulator interface used by the loop.
class EnvironmentPort {
public:
    virtual ~EnvironmentPort() = default;
    virtual Observation observe() const = 0;
    virtual StepEvent step(const Action& a) = 0;
    virtual bool goal_reached() const = 0;
};

/// Perfect-tracking prediction of the states reached by `actions`. Throws on an empty segment.
std::vector<State> predict_state(const SystemModel& model, const State& x, const std::vector<Action>& actions);

enum class Mode { Rail, Unfiltered, BackupOnly };
std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

struct FilterConfig {
    std::size_t ta = 8;          ///< executed actions per iteration
    std::size_t tp = 16;         ///< plan length requested from the policy
    std::size_t partitions = 8;  ///< time cells per verified segment
    std::size_t lattice_per_axis = 5;
    std::size_t max_verified = 6;
    std::size_t max_steps = 400;  ///< episode timeout in control steps
    Mode mode = Mode::Rail;

    BackupOptions backup_options(double dt) const;
    void validate() const;
};

/// Nominal head, head of the stored backup (an intervention), or head of a freshly solved backup.
enum class Source { Nominal, Backup, Fresh };
std::string to_string(Source s);

struct FilterResult {
    std::vector<Action> head;
    BackupPlan backup;
    Source source = Source::Backup;
    SafetyVerdict head_verdict;
    bool backup_found = false;

    bool intervention() const { return source == Source::Backup; }
};

/// One filter iteration: commit the nominal head with a fresh certified backup
/// from its end state, or the head of the stored backup with its remainder.
FilterResult filter_step(const State& x, const Plan& nominal, const BackupPlan& stored, const Scene& scene,
                         const SystemModel& model, const FilterConfig& config);

enum class EpisodeStatus { Success, Timeout, Collision, Unstartable, Stalled };
std::string to_string(EpisodeStatus s);

/// Deterministic per-iteration record; wall-clock time is kept separately.
struct IterationRecord {
    std::size_t iteration = 0;
    std::size_t step = 0;  ///< control steps executed before this iteration
    State state;
    Source source = Source::Nominal;
    bool intervention = false;
    SafetyVerdict head_verdict;
    bool backup_found = false;
    std::size_t backup_remaining = 0;
    std::vector<Action> committed;
};

struct EpisodeLog {
    EpisodeStatus status = EpisodeStatus::Timeout;
    std::size_t steps = 0;  ///< transitions executed (the episode horizon)
    std::size_t collision_transitions = 0;
    std::size_t limit_transitions = 0;
    std::size_t interventions = 0;
    std::size_t budget_misses = 0;
    std::vector<IterationRecord> records;
    std::vector<StepEvent> events;         ///< offending steps only, in order
    std::vector<std::size_t> event_steps;  ///< step index of each event
    std::vector<double> validation_seconds;

    bool success() const { return status == EpisodeStatus::Success; }
    bool safe_success() const { return success() && collision_transitions == 0 && limit_transitions == 0; }
};

/// Receding-horizon loop around the filter. Unfiltered episodes end at the
/// first collision; the other modes run to the goal, the timeout, or a stall.
EpisodeLog rail_loop(EnvironmentPort& env, PolicyPort& policy, const SystemModel& model, const Scene& scene,
                     const FilterConfig& config);

}  // namespace rail
