#include "sagaqnet/simengine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <sstream>
#include <variant>

namespace sqn {

std::string RunResult::metrics_text() const {
    std::ostringstream os;
    for (const auto& [name, value] : metrics) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.12g", value);
        os << "metric=" << name << " value=" << buf << "\n";
    }
    return os.str();
}

namespace {

// counter-based generator (splitmix64): per-node streams stay stable when
// unrelated parts of a scenario change
struct Rng {
    std::uint64_t state = 0;

    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double unit() { return double(next() >> 11) * 0x1.0p-53; }
};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ull;
    return h;
}

// ---- messages --------------------------------------------------------------

struct MsgObjectiveSubmit { Objective objective; };
struct MsgLockRequest { RecordId record; SagaId saga; NodeId requester; };
struct MsgLockReply { RecordId record; SagaId saga; bool granted = false; };
struct MsgSagaStart { Saga saga; };
struct MsgTaskStart { SagaId saga; int task = 0; int priority = 0; };
struct MsgTaskComplete { SagaId saga; int task = 0; TaskOutcome outcome = TaskOutcome::Success;
                         bool retryable = false; };
struct MsgSagaComplete { SagaId saga; bool success = false; };
struct MsgClassicalDeliver { SagaId saga; NodeId from; std::string payload; };
struct MsgUpdateDeliver { Update update; std::uint64_t stamp = 0; };
struct MsgTaskFinish { SagaId saga; int task = 0; };  // local execution timer
struct MsgMonitorTick {};

using Message = std::variant<MsgObjectiveSubmit, MsgLockRequest, MsgLockReply, MsgSagaStart,
                             MsgTaskStart, MsgTaskComplete, MsgSagaComplete, MsgClassicalDeliver,
                             MsgUpdateDeliver, MsgTaskFinish, MsgMonitorTick>;

struct Event {
    double time = 0.0;
    std::uint64_t seq = 0;
    NodeId dest;
    Message payload;

    bool operator<(const Event& o) const {
        if (time != o.time) return time < o.time;
        return seq < o.seq;
    }
};

// queue order: priority desc, enqueue order asc, saga id asc, task index asc
struct QueueEntry {
    int priority = 0;
    std::uint64_t enqueued = 0;
    SagaId saga;
    int task = 0;

    bool operator<(const QueueEntry& o) const {
        if (priority != o.priority) return priority > o.priority;
        if (enqueued != o.enqueued) return enqueued < o.enqueued;
        if (saga != o.saga) return saga < o.saga;
        return task < o.task;
    }
};

struct Waiter {
    SagaId saga;
    NodeId requester;
};

/// Per-participant execution state of one choreographed saga.
struct ChoreoState {
    Saga saga;
    std::vector<char> dep_done;
    std::vector<char> enqueued;
    std::vector<int> attempts;
};

struct NodeState {
    NodeId id;
    ResourceView view;
    Rng rng;
    double busy_until = 0.0;
    std::set<QueueEntry> queue;
    std::uint64_t out_seq = 0;  // per-origin update sequence

    // total-order update application: buffered by global stamp
    std::map<std::uint64_t, Update> pending_updates;
    std::uint64_t applied_stamp = 0;

    std::map<RecordId, std::deque<Waiter>> waiters;  // lock arbitration queues
    std::map<SagaId, ChoreoState> choreo;
};

enum class Phase { Locking, Running, Done };

/// Initiator-side bookkeeping for one saga.
struct Exec {
    Saga saga;
    Objective objective;
    double submitted = 0.0;
    Phase phase = Phase::Locking;
    size_t next_lock = 0;
    std::vector<char> started;
    std::vector<char> done;
    std::vector<int> attempts;
    int remaining = 0;
    int executions = 0;  // task effect count, for metrics
    std::set<RecordId> owned;  // records seen locked to this saga via the stream
};

std::string to_string(TaskOutcome o) {
    return o == TaskOutcome::Success ? "success" : "heralded_failure";
}

class Engine {
public:
    Engine(const Scenario& scenario, std::uint64_t seed) : scn_(scenario), seed_(seed) {}

    RunResult run() {
        init();
        while (!events_.empty()) {
            Event ev = *events_.begin();
            events_.erase(events_.begin());
            if (scn_.horizon > 0.0 && ev.time > scn_.horizon) break;
            now_ = ev.time;
            std::visit([&](const auto& msg) { handle(nodes_.at(ev.dest), msg); }, ev.payload);
        }
        finish_metrics();
        RunResult res;
        res.trace = trace_.str();
        for (auto& [id, n] : nodes_) res.views.emplace(id, std::move(n.view));
        res.metrics = metrics_;
        res.trace += res.metrics_text();
        return res;
    }

private:
    // ---- setup -------------------------------------------------------------

    void init() {
        for (const auto& [id, caps] : scn_.nodes) {
            NodeState n;
            n.id = id;
            n.rng.state = seed_ ^ fnv1a(id);
            nodes_.emplace(id, std::move(n));
        }
        // the scenario is common knowledge at t=0: preload every replica
        for (auto& [id, n] : nodes_) {
            for (const auto& [nid, caps] : scn_.nodes) {
                CapabilitySet c = caps;
                if (c.memory_slots == 0) {
                    for (TaskKind k : storage_requiring_kinds()) c.tasks.erase(k);
                }
                n.view.preload_capability(c);
            }
            for (const auto& e : scn_.channels) n.view.preload_channel(e);
            for (const auto& l : scn_.classical) n.view.preload_classical(l);
            for (const auto& r : scn_.entanglement) n.view.preload_record(r);
        }
        compute_latencies();
        for (const auto& o : scn_.objectives) {
            NodeId initiator = o.kind == ObjectiveKind::EstablishGraphState
                                   ? *o.graph.nodes.begin()
                                   : std::min(o.a, o.b);
            schedule(o.arrival, initiator, MsgObjectiveSubmit{o});
        }
        if (!scn_.monitor.pairs.empty()) {
            std::set<NodeId> leads;
            for (const auto& mp : scn_.monitor.pairs) leads.insert(std::min(mp.a, mp.b));
            double end = scn_.horizon > 0.0 ? scn_.horizon : 0.0;
            for (double t = 0.0; t <= end; t += scn_.monitor.period) {
                for (const auto& lead : leads) schedule(t, lead, MsgMonitorTick{});
                if (scn_.monitor.period <= 0.0) break;
            }
        }
    }

    void compute_latencies() {
        // all-pairs shortest classical latency (Dijkstra per source)
        for (const auto& [src, n0] : nodes_) {
            std::map<NodeId, double> dist;
            std::set<std::pair<double, NodeId>> frontier;
            dist[src] = 0.0;
            frontier.insert({0.0, src});
            while (!frontier.empty()) {
                auto [d, cur] = *frontier.begin();
                frontier.erase(frontier.begin());
                for (const auto& l : scn_.classical) {
                    NodeId next;
                    if (l.a == cur) next = l.b;
                    else if (l.b == cur) next = l.a;
                    else continue;
                    double nd = d + l.latency;
                    auto it = dist.find(next);
                    if (it == dist.end() || nd < it->second) {
                        if (it != dist.end()) frontier.erase({it->second, next});
                        dist[next] = nd;
                        frontier.insert({nd, next});
                    }
                }
            }
            for (const auto& [dst, d] : dist) latency_[{src, dst}] = d;
        }
    }

    double latency(const NodeId& a, const NodeId& b) const {
        auto it = latency_.find({a, b});
        if (it == latency_.end())
            throw EngineError("no classical route " + a + " -> " + b);
        return it->second;
    }

    // ---- primitives ----------------------------------------------------------

    void schedule(double t, const NodeId& dest, Message m) {
        events_.insert(Event{t, event_seq_++, dest, std::move(m)});
    }

    void send(const NodeId& from, const NodeId& to, Message m, const SagaId& saga) {
        schedule(now_ + latency(from, to), to, std::move(m));
        if (to != from) {
            metrics_["messages_total"] += 1;
            if (!saga.empty()) metrics_["saga." + saga + ".messages"] += 1;
        }
    }

    /// Total-order broadcast of one change: origin applies immediately for
    /// local progress; every replica (origin included) additionally applies
    /// the stamped stream in global stamp order.
    void broadcast(NodeState& origin, const Change& c, const SagaId& saga) {
        Update u{origin.id, ++origin.out_seq, c};
        std::uint64_t stamp = ++stamp_counter_;
        origin.view.apply_change_direct(c);
        for (auto& [id, n] : nodes_) {
            schedule(now_ + latency(origin.id, id), id, MsgUpdateDeliver{u, stamp});
            if (id != origin.id) {
                metrics_["messages_total"] += 1;
                if (!saga.empty()) metrics_["saga." + saga + ".messages"] += 1;
            }
        }
    }

    void trace(const NodeId& node, const std::string& kind, const SagaId& saga,
               const std::vector<std::pair<std::string, std::string>>& detail) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.9f", now_);
        trace_ << "t=" << buf << " node=" << node << " kind=" << kind
               << " saga=" << (saga.empty() ? "-" : saga) << " detail=";
        bool first = true;
        for (const auto& [k, v] : detail) {
            if (!first) trace_ << ",";
            trace_ << k << "=" << v;
            first = false;
        }
        trace_ << "\n";
    }

    static std::string join(const std::vector<RecordId>& ids) {
        std::string out;
        for (const auto& id : ids) {
            if (!out.empty()) out += ";";
            out += id;
        }
        return out.empty() ? "-" : out;
    }

    // ---- objective intake ----------------------------------------------------

    void handle(NodeState& n, const MsgObjectiveSubmit& m) {
        const Objective& o = m.objective;
        trace(n.id, "objective_submit", o.id,
              {{"kind", to_string(o.kind)}, {"priority", std::to_string(o.priority)}});
        SagaId saga_id = o.id;
        Saga s;
        try {
            s = plan(o, n.view, scn_.policy, now_, n.id, saga_id);
        } catch (const std::exception& e) {
            trace(n.id, "plan_error", o.id, {{"reason", e.what()}});
            metrics_["objective." + o.id + ".completed"] = 0;
            return;
        }
        Exec ex;
        ex.saga = s;
        ex.objective = o;
        ex.submitted = now_;
        ex.started.assign(s.tasks.size(), 0);
        ex.done.assign(s.tasks.size(), 0);
        ex.attempts.assign(s.tasks.size(), 0);
        ex.remaining = int(s.tasks.size());
        std::sort(ex.saga.input_locks.begin(), ex.saga.input_locks.end());
        ex.saga.input_locks.erase(
            std::unique(ex.saga.input_locks.begin(), ex.saga.input_locks.end()),
            ex.saga.input_locks.end());
        execs_.emplace(saga_id, std::move(ex));
        advance_locking(n, saga_id);
    }

    // ---- lock acquisition (ascending record id, FIFO queues at home nodes) ---

    void advance_locking(NodeState& initiator, const SagaId& saga_id) {
        Exec& ex = execs_.at(saga_id);
        if (ex.next_lock >= ex.saga.input_locks.size()) {
            start_running(initiator, ex);
            return;
        }
        const RecordId& rid = ex.saga.input_locks[ex.next_lock];
        const auto* rec = initiator.view.find_record(rid);
        if (!rec) {
            fail_saga(initiator, ex, "lock target " + rid + " vanished");
            return;
        }
        NodeId home = rec->home_node();
        trace(initiator.id, "lock_request", saga_id, {{"record", rid}, {"home", home}});
        send(initiator.id, home, MsgLockRequest{rid, saga_id, initiator.id}, saga_id);
    }

    void handle(NodeState& n, const MsgLockRequest& m) {
        const auto* rec = n.view.find_record(m.record);
        if (!rec) {
            trace(n.id, "lock_denied", m.saga, {{"record", m.record}, {"reason", "no_record"}});
            send(n.id, m.requester, MsgLockReply{m.record, m.saga, false}, m.saga);
            return;
        }
        if (rec->lock.empty() || rec->lock == m.saga) {
            grant_lock(n, m.record, m.saga, m.requester);
            return;
        }
        trace(n.id, "lock_wait", m.saga, {{"record", m.record}, {"holder", rec->lock}});
        n.waiters[m.record].push_back({m.saga, m.requester});
    }

    void grant_lock(NodeState& home, const RecordId& rid, const SagaId& saga,
                    const NodeId& requester) {
        trace(home.id, "lock_grant", saga, {{"record", rid}});
        broadcast(home, LockRecord{rid, saga}, saga);
        send(home.id, requester, MsgLockReply{rid, saga, true}, saga);
    }

    void handle(NodeState& n, const MsgLockReply& m) {
        auto it = execs_.find(m.saga);
        if (it == execs_.end() || it->second.phase != Phase::Locking ||
            it->second.saga.initiator != n.id)
            return;
        Exec& ex = it->second;
        if (!m.granted) {
            fail_saga(n, ex, "lock denied on " + m.record);
            return;
        }
        ex.owned.insert(m.record);
        ex.next_lock++;
        advance_locking(n, m.saga);
    }

    // ---- saga execution ------------------------------------------------------

    void start_running(NodeState& initiator, Exec& ex) {
        ex.phase = Phase::Running;
        trace(initiator.id, "saga_start", ex.saga.id,
              {{"mode", sqn::to_string(ex.saga.mode)},
               {"tasks", std::to_string(ex.saga.tasks.size())},
               {"priority", std::to_string(ex.saga.priority)}});
        if (ex.saga.tasks.empty()) {
            finish_saga(initiator, ex, true);
            return;
        }
        if (ex.saga.mode == ExecMode::Orchestration) {
            dispatch_ready(initiator, ex);
        } else {
            // the initiator only hears about terminal tasks in choreography
            ex.remaining = 0;
            for (int i = 0; i < int(ex.saga.tasks.size()); ++i)
                if (successors_of(ex.saga, i).empty()) ex.remaining++;
            std::set<NodeId> participants;
            for (const auto& t : ex.saga.tasks) participants.insert(t.responsible());
            for (const auto& p : participants)
                send(initiator.id, p, MsgSagaStart{ex.saga}, ex.saga.id);
        }
    }

    std::vector<int> deps_of(const Saga& s, int task) const {
        std::vector<int> out;
        for (const auto& [a, b] : s.deps)
            if (b == task) out.push_back(a);
        return out;
    }

    std::vector<int> successors_of(const Saga& s, int task) const {
        std::vector<int> out;
        for (const auto& [a, b] : s.deps)
            if (a == task) out.push_back(b);
        return out;
    }

    void dispatch_ready(NodeState& initiator, Exec& ex) {
        for (int i = 0; i < int(ex.saga.tasks.size()); ++i) {
            if (ex.started[i] || ex.done[i]) continue;
            bool ready = true;
            for (int d : deps_of(ex.saga, i)) ready = ready && ex.done[d];
            if (!ready) continue;
            ex.started[i] = 1;
            send_task_start(initiator, ex, i);
        }
    }

    void send_task_start(NodeState& initiator, Exec& ex, int i) {
        ex.attempts[i]++;
        const NodeId& resp = ex.saga.tasks[i].responsible();
        send(initiator.id, resp, MsgTaskStart{ex.saga.id, i, ex.saga.priority}, ex.saga.id);
    }

    void handle(NodeState& n, const MsgTaskStart& m) {
        auto it = execs_.find(m.saga);
        if (it == execs_.end() || it->second.phase != Phase::Running) return;
        n.queue.insert(QueueEntry{m.priority, event_seq_++, m.saga, m.task});
        pump(n);
    }

    void handle(NodeState& n, const MsgSagaStart& m) {
        ChoreoState cs;
        cs.saga = m.saga;
        cs.dep_done.assign(m.saga.tasks.size(), 0);
        cs.enqueued.assign(m.saga.tasks.size(), 0);
        cs.attempts.assign(m.saga.tasks.size(), 0);
        n.choreo.emplace(m.saga.id, std::move(cs));
        enqueue_choreo_ready(n, n.choreo.at(m.saga.id));
        pump(n);
    }

    void enqueue_choreo_ready(NodeState& n, ChoreoState& cs) {
        for (int i = 0; i < int(cs.saga.tasks.size()); ++i) {
            if (cs.enqueued[i]) continue;
            if (cs.saga.tasks[i].responsible() != n.id) continue;
            bool ready = true;
            for (int d : deps_of(cs.saga, i)) ready = ready && cs.dep_done[d];
            if (!ready) continue;
            cs.enqueued[i] = 1;
            cs.attempts[i]++;
            n.queue.insert(QueueEntry{cs.saga.priority, event_seq_++, cs.saga.id, i});
        }
    }

    void handle(NodeState& n, const MsgTaskComplete& m) {
        // choreography peer notification: mark the dependency and enqueue
        auto cit = n.choreo.find(m.saga);
        if (cit != n.choreo.end()) {
            ChoreoState& cs = cit->second;
            cs.dep_done[m.task] = 1;
            enqueue_choreo_ready(n, cs);
            pump(n);
        }
        // initiator bookkeeping (orchestration, and choreography terminals)
        auto it = execs_.find(m.saga);
        if (it == execs_.end() || it->second.phase != Phase::Running ||
            it->second.saga.initiator != n.id)
            return;
        Exec& ex = it->second;
        // in choreography the initiator only accounts for terminal tasks;
        // anything else was a peer dependency notification handled above
        if (ex.saga.mode == ExecMode::Choreography &&
            m.outcome == TaskOutcome::Success && !successors_of(ex.saga, m.task).empty())
            return;
        if (m.outcome == TaskOutcome::HeraldedFailure) {
            if (ex.saga.mode == ExecMode::Orchestration && m.retryable &&
                ex.attempts[m.task] < ex.saga.tasks[m.task].params.max_attempts) {
                send_task_start(n, ex, m.task);
                return;
            }
            fail_saga(n, ex, "task " + ex.saga.tasks[m.task].id + " failed terminally");
            return;
        }
        if (ex.done[m.task]) return;
        ex.done[m.task] = 1;
        ex.remaining--;
        if (ex.remaining == 0) {
            finish_saga(n, ex, true);
            return;
        }
        if (ex.saga.mode == ExecMode::Orchestration) dispatch_ready(n, ex);
    }

    void handle(NodeState& n, const MsgSagaComplete& m) {
        auto it = execs_.find(m.saga);
        if (it == execs_.end() || it->second.phase != Phase::Running ||
            it->second.saga.initiator != n.id)
            return;
        if (!m.success) fail_saga(n, it->second, "participant reported failure");
    }

    // ---- task execution at the responsible node -----------------------------

    void pump(NodeState& n) {
        while (now_ >= n.busy_until && !n.queue.empty()) {
            QueueEntry q = *n.queue.begin();
            n.queue.erase(n.queue.begin());
            if (auto it = execs_.find(q.saga); it != execs_.end() && it->second.phase == Phase::Done)
                continue;  // aborted saga, drop its queued work
            const Saga* s = saga_of(n, q.saga);
            if (!s) continue;
            const TaskInstance& t = s->tasks[q.task];
            trace(n.id, "task_start", q.saga, {{"task", t.id}, {"kind", sqn::to_string(t.kind)}});
            n.busy_until = now_ + task_duration(t, n.view);
            schedule(n.busy_until, n.id, MsgTaskFinish{q.saga, q.task});
            return;
        }
    }

    const Saga* saga_of(NodeState& n, const SagaId& id) {
        auto cit = n.choreo.find(id);
        if (cit != n.choreo.end()) return &cit->second.saga;
        auto it = execs_.find(id);
        if (it != execs_.end()) return &it->second.saga;
        return nullptr;
    }

    void handle(NodeState& n, const MsgTaskFinish& m) {
        const Saga* s = saga_of(n, m.saga);
        if (auto it = execs_.find(m.saga); it != execs_.end() && it->second.phase == Phase::Done)
            s = nullptr;
        if (!s) {
            after_task(n);
            return;
        }
        const TaskInstance& t = s->tasks[m.task];
        double r = n.rng.unit();
        EffectResult eff;
        std::string error;
        try {
            eff = apply_effect(t, n.view, now_, r, m.saga);
        } catch (const std::exception& e) {
            error = e.what();
        }
        if (auto it = execs_.find(m.saga); it != execs_.end()) it->second.executions++;

        if (!error.empty()) {
            trace(n.id, "task_error", m.saga, {{"task", t.id}, {"reason", error}});
            report_failure(n, *s, m.task, false);
            after_task(n);
            return;
        }
        std::vector<RecordId> consumed, created;
        for (const auto& c : eff.changes) {
            if (const auto* rm = std::get_if<RemoveRecord>(&c)) consumed.push_back(rm->id);
            if (const auto* put = std::get_if<PutRecord>(&c)) created.push_back(put->record.id);
            broadcast(n, c, m.saga);
        }
        std::vector<std::pair<std::string, std::string>> detail{
            {"task", t.id},
            {"kind", sqn::to_string(t.kind)},
            {"outcome", to_string(eff.outcome)},
            {"consumed", join(consumed)},
            {"created", join(created)}};
        for (const auto& note : eff.notes) detail.push_back({note.key, note.value});
        trace(n.id, "task_complete", m.saga, detail);

        if (t.kind == TaskKind::ClassicalSend)
            send(n.id, t.params.participants[1],
                 MsgClassicalDeliver{m.saga, n.id, t.params.payload}, m.saga);

        if (eff.outcome == TaskOutcome::HeraldedFailure) {
            bool retryable = eff.changes.empty();
            report_failure(n, *s, m.task, retryable);
        } else {
            report_success(n, *s, m.task);
        }
        after_task(n);
    }

    void after_task(NodeState& n) { pump(n); }

    void report_success(NodeState& n, const Saga& s, int task) {
        if (s.mode == ExecMode::Orchestration) {
            send(n.id, s.initiator, MsgTaskComplete{s.id, task, TaskOutcome::Success, false},
                 s.id);
            return;
        }
        // choreography: notify each successor's responsible node; terminal
        // tasks notify the initiator
        auto succs = successors_of(s, task);
        if (succs.empty()) {
            send(n.id, s.initiator, MsgTaskComplete{s.id, task, TaskOutcome::Success, false},
                 s.id);
            return;
        }
        std::set<NodeId> notified;
        for (int i : succs) notified.insert(s.tasks[i].responsible());
        for (const auto& dest : notified)
            send(n.id, dest, MsgTaskComplete{s.id, task, TaskOutcome::Success, false}, s.id);
    }

    void report_failure(NodeState& n, const Saga& s, int task, bool retryable) {
        if (s.mode == ExecMode::Orchestration) {
            send(n.id, s.initiator,
                 MsgTaskComplete{s.id, task, TaskOutcome::HeraldedFailure, retryable}, s.id);
            return;
        }
        ChoreoState& cs = n.choreo.at(s.id);
        if (retryable && cs.attempts[task] < s.tasks[task].params.max_attempts) {
            cs.attempts[task]++;
            n.queue.insert(QueueEntry{s.priority, event_seq_++, s.id, task});
            return;
        }
        send(n.id, s.initiator, MsgSagaComplete{s.id, false}, s.id);
    }

    // ---- completion ----------------------------------------------------------

    void fail_saga(NodeState& initiator, Exec& ex, const std::string& reason) {
        if (ex.phase == Phase::Done) return;
        trace(initiator.id, "saga_abort", ex.saga.id, {{"reason", reason}});
        finish_saga(initiator, ex, false);
    }

    void finish_saga(NodeState& initiator, Exec& ex, bool success) {
        ex.phase = Phase::Done;
        // release everything this saga still holds
        std::set<RecordId> to_release = ex.owned;
        for (const auto& r : ex.saga.final_records) to_release.insert(r);
        for (const auto& [rid, rec] : initiator.view.entanglement())
            if (rec.lock == ex.saga.id) to_release.insert(rid);
        for (const auto& rid : to_release) {
            const auto* rec = initiator.view.find_record(rid);
            bool is_final = std::count(ex.saga.final_records.begin(),
                                       ex.saga.final_records.end(), rid) > 0;
            if ((rec && rec->lock == ex.saga.id) || (!rec && is_final))
                broadcast(initiator, UnlockRecord{rid}, ex.saga.id);
        }
        double fidelity = 0.0;
        if (success) {
            fidelity = 1.0;
            for (const auto& rid : ex.saga.final_records) {
                const auto* rec = initiator.view.find_record(rid);
                fidelity = rec ? std::min(fidelity, initiator.view.decayed_fidelity(*rec, now_))
                               : 0.0;
            }
        }
        char fbuf[40];
        std::snprintf(fbuf, sizeof fbuf, "%.12f", fidelity);
        trace(initiator.id, "saga_complete", ex.saga.id,
              {{"status", success ? "success" : "failure"},
               {"records", join(ex.saga.final_records)},
               {"fidelity", fbuf}});
        const std::string& oid = ex.objective.id;
        metrics_["objective." + oid + ".completed"] = success ? 1 : 0;
        metrics_["objective." + oid + ".time"] = now_ - ex.objective.arrival;
        metrics_["objective." + oid + ".attempts"] = ex.executions;
        if (success) metrics_["objective." + oid + ".fidelity"] = fidelity;
        monitor_active_.erase(ex.saga.id.substr(0, ex.saga.id.find('#')));
    }

    // ---- replicated view stream ---------------------------------------------

    void handle(NodeState& n, const MsgUpdateDeliver& m) {
        n.pending_updates.emplace(m.stamp, m.update);
        while (!n.pending_updates.empty() &&
               n.pending_updates.begin()->first == n.applied_stamp + 1) {
            Update u = n.pending_updates.begin()->second;
            n.pending_updates.erase(n.pending_updates.begin());
            n.applied_stamp++;
            n.view.apply_update(u);
            note_ownership(u.change);
            check_waiters(n, u.change);
        }
    }

    void note_ownership(const Change& c) {
        if (const auto* put = std::get_if<PutRecord>(&c)) {
            auto it = execs_.find(put->record.lock);
            if (it != execs_.end()) it->second.owned.insert(put->record.id);
        } else if (const auto* rm = std::get_if<RemoveRecord>(&c)) {
            for (auto& [id, ex] : execs_) ex.owned.erase(rm->id);
        }
    }

    void check_waiters(NodeState& n, const Change& c) {
        RecordId rid;
        if (const auto* u = std::get_if<UnlockRecord>(&c)) rid = u->id;
        else if (const auto* rm = std::get_if<RemoveRecord>(&c)) rid = rm->id;
        else return;
        auto wit = n.waiters.find(rid);
        if (wit == n.waiters.end() || wit->second.empty()) return;
        const auto* rec = n.view.find_record(rid);
        if (!rec) {
            for (const auto& w : wit->second) {
                trace(n.id, "lock_denied", w.saga, {{"record", rid}, {"reason", "consumed"}});
                send(n.id, w.requester, MsgLockReply{rid, w.saga, false}, w.saga);
            }
            n.waiters.erase(wit);
            return;
        }
        if (!rec->lock.empty()) return;
        Waiter w = wit->second.front();
        wit->second.pop_front();
        if (wit->second.empty()) n.waiters.erase(wit);
        grant_lock(n, rid, w.saga, w.requester);
    }

    // ---- classical delivery and monitor -------------------------------------

    void handle(NodeState& n, const MsgClassicalDeliver& m) {
        trace(n.id, "classical_deliver", m.saga, {{"from", m.from}, {"payload", m.payload}});
    }

    void handle(NodeState& n, const MsgMonitorTick& m) {
        (void)m;
        trace(n.id, "monitor_tick", "", {});
        MonitorConfig mine;
        for (const auto& mp : scn_.monitor.pairs)
            if (std::min(mp.a, mp.b) == n.id) mine.pairs.push_back(mp);
        auto objectives = monitor_tick(n.view, mine, scn_.policy, now_);
        for (auto& o : objectives) {
            if (monitor_active_.count(o.id)) continue;
            monitor_active_.insert(o.id);
            Objective submit = o;
            submit.id = o.id + "#" + std::to_string(monitor_serial_++);
            schedule(now_, n.id, MsgObjectiveSubmit{submit});
        }
    }

    void finish_metrics() {
        metrics_["events_total"] = double(event_seq_);
        double completed = 0;
        for (const auto& o : scn_.objectives)
            if (metrics_.count("objective." + o.id + ".completed"))
                completed += metrics_["objective." + o.id + ".completed"];
        metrics_["objectives_completed"] = completed;
        if (!metrics_.count("messages_total")) metrics_["messages_total"] = 0;
    }

    const Scenario& scn_;
    std::uint64_t seed_ = 0;
    double now_ = 0.0;
    std::uint64_t event_seq_ = 0;
    std::uint64_t stamp_counter_ = 0;
    int monitor_serial_ = 0;
    std::set<Event> events_;
    std::map<NodeId, NodeState> nodes_;
    std::map<SagaId, Exec> execs_;
    std::map<std::pair<NodeId, NodeId>, double> latency_;
    std::set<std::string> monitor_active_;
    std::ostringstream trace_;
    std::map<std::string, double> metrics_;
};

}  // namespace

RunResult run(const Scenario& scenario, std::uint64_t seed) {
    return Engine(scenario, seed).run();
}

}  // namespace sqn
