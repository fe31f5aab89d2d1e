#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tuition/engine.hpp"
#include "tuition/server.hpp"
#include "tuition/time.hpp"
#include "tuition/vas_ledger.hpp"

namespace tuition::sim {

enum class FaultKind {
  None,
  DropRequest,      // first send of the payment request is lost
  DropResponse,     // first PAYSTATUS is lost; the retry hits dedup
  Duplicate,        // the payment request is delivered twice
  DropAck,          // every PAYSTATUS is lost; the bank reverses
  ClearingAnomaly,  // routed via CLEARING and paid one rupiah short
  WrongAmount,      // client pays one rupiah short on a normal channel
  WrongAccount,     // client pays for a student the engine does not know
};
std::string_view to_string(FaultKind kind);
std::optional<FaultKind> parse_fault_kind(std::string_view text);

struct FaultPlan {
  double drop_request_rate = 0;
  double drop_response_rate = 0;
  double duplicate_rate = 0;
  double drop_ack_rate = 0;
  double clearing_anomaly_rate = 0;
  // Transaction index -> the one fault it gets; sampling is skipped for it.
  std::map<std::uint64_t, FaultKind> overrides;

  // Throws ConfigError.
  void validate() const;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  AcademicPeriod period{2010, Semester::Regular1};
  std::size_t students = 100;
  std::vector<Paycode> paycodes{Paycode::Bill1};
  // Defaults to one attempt per outstanding bill.
  std::optional<std::size_t> attempts;
  std::int64_t latency_ms = 1000;
  int max_sends = 3;
  Timestamp start = make_timestamp(2010, 2, 15, 8, 0, 0);
  std::string bank_code = "014";
  std::string institution_code = "UNIV";
  double scholarship_rate = 0.2;
  // false: pay the bills already in the store instead of generating a cohort.
  bool generate_population = true;
  FaultPlan faults;

  // key=value lines with [faults] and [overrides] sections. Throws ConfigError.
  static ScenarioConfig parse(std::string_view text);
  static ScenarioConfig load(const std::filesystem::path& path);
  std::string to_text() const;
};

struct ScenarioResult {
  std::size_t attempted = 0;
  std::size_t success = 0;
  std::size_t wrong_amount = 0;
  std::size_t bill_is_zero = 0;
  std::size_t wrong_account = 0;
  std::size_t reversed = 0;
  std::size_t cancelled = 0;
  std::size_t reversal_lost = 0;
  std::size_t orphans = 0;
  std::size_t no_bill = 0;
  std::size_t timeouts = 0;
  std::size_t retries = 0;
  std::size_t duplicates = 0;
  std::int64_t max_latency_ms = 0;
  std::size_t over_latency_budget = 0;

  std::string to_text() const;
  friend bool operator==(const ScenarioResult&, const ScenarioResult&) = default;
};

// A bill the simulated client means to pay.
struct PaymentSlot {
  std::string student_id;
  Paycode paycode = Paycode::Bill1;
};

class ReplayLog {
 public:
  void record(Timestamp at, std::string_view direction, std::string_view fate, std::string_view line);
  const std::vector<std::string>& lines() const { return lines_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> lines_;
};

inline constexpr std::int64_t kLatencyBudgetMs = 3000;

// Builds the cohort, tariffs and bills for a scenario through the engine.
// Returns the bills to pay, in attempt order.
std::vector<PaymentSlot> prepare_population(const ScenarioConfig& config, ups::Engine& engine);
// Outstanding bills already in the store, for the configured paycodes.
std::vector<PaymentSlot> existing_slots(const ScenarioConfig& config, const store::Store& store);
// Truncates or extends the slots to `attempts`; extra attempts repeat
// earlier bills.
std::vector<PaymentSlot> schedule_attempts(const ScenarioConfig& config, std::vector<PaymentSlot> slots);

// The bank side: one client payment at a time, each a bill inquiry followed
// by a payment, with retries, faults and reversals.
class VirtualAccountSystem {
 public:
  VirtualAccountSystem(ScenarioConfig config, ManualClock& clock, wire::Transport& transport);

  // Runs attempts [next_index(), end). Throws whatever the transport throws;
  // after a crash, call resume() with a fresh transport and run again.
  void run(const std::vector<PaymentSlot>& slots);
  // Settles the transaction that was in flight when the engine went away.
  void resume(wire::Transport& transport);

  std::size_t next_index() const { return next_index_; }
  const ScenarioResult& result() const { return result_; }
  const VasLedger& ledger() const { return ledger_; }
  const ReplayLog& replay() const { return replay_; }

 private:
  struct Faults {
    FaultKind forced = FaultKind::None;
    bool drop_ack = false;
    bool clearing = false;
  };
  enum class Phase { Quiet, Payment, Reversal };

  void attempt(std::uint64_t index, const PaymentSlot& slot);
  std::optional<std::string> send(const std::string& line, std::uint64_t index, int phase,
                                  FaultKind forced, bool lose_every_reply);
  void settle_lost_status(std::uint64_t index);
  void finish(std::uint64_t index, Timestamp started);
  std::string transaction_no(char prefix, std::uint64_t index) const;

  ScenarioConfig config_;
  ManualClock& clock_;
  wire::Transport* transport_;
  VasLedger ledger_;
  ScenarioResult result_;
  ReplayLog replay_;
  std::size_t next_index_ = 0;

  // Crash recovery state.
  Phase phase_ = Phase::Quiet;
  std::optional<protocol::PaymentMessage> inflight_;
  std::size_t inflight_entry_ = 0;
  Timestamp inflight_started_;
};

struct ScenarioRun {
  ScenarioResult result;
  VasLedger ledger;
  ReplayLog replay;
};

// Prepares the population (or reads it) and runs every attempt in process.
ScenarioRun run_scenario(const ScenarioConfig& config, ups::Engine& engine, ManualClock& clock);

// Writes result.txt, replay.log and vas_ledger.tsv under `dir`.
void write_outputs(const ScenarioRun& run, const std::filesystem::path& dir);

}  // namespace tuition::sim
