#pragma once

#include <array>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tuition/ledger.hpp"
#include "tuition/protocol.hpp"
#include "tuition/store.hpp"
#include "tuition/time.hpp"

namespace tuition::ups {

enum class EngineState { Initializing, Ready, ComputingBills, GeneratingReports };
std::string_view to_string(EngineState state);

struct ComputeTarget {
  std::optional<std::string> student;  // nullopt: every student active in the period
  Paycode paycode = Paycode::Bill1;
  AcademicPeriod period;
};

struct BillComputeCommand {
  std::vector<ComputeTarget> entries;
  // Defaults to 30 days after the engine clock.
  std::optional<Timestamp> due_date;
};

struct ComputeSummary {
  std::size_t created = 0;
  std::size_t replaced = 0;
  std::size_t unchanged = 0;
  std::size_t skipped_paid = 0;

  std::size_t generated() const { return created + replaced; }
};

struct FineSummary {
  std::size_t fines = 0;
  Idr total;
};

class Engine {
 public:
  static constexpr std::int64_t kDefaultDueMs = 30LL * 86'400'000;

  Engine(store::Store& store, const Clock& clock);

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // INITIALIZING -> READY.
  void start();
  EngineState state() const;

  // --- bank-facing processes ----------------------------------------------
  protocol::BillResponse handle_bill_request(const protocol::BillRequest& request);
  PaymentStatus handle_payment(const protocol::PaymentMessage& payment);
  ReversalStatus handle_reversal(const protocol::PaymentMessage& reversal);

  // --- operator and data feeds ----------------------------------------------
  ComputeSummary run_bill_computation(const BillComputeCommand& command);
  store::UpsertSummary ingest_academic_data(const store::AcademicBatch& batch);
  bool update_tariff(const ledger::TariffBook& book);
  FineSummary assess_fines(const AcademicPeriod& period, const ledger::FinePolicy& policy);

  ledger::Eligibility check_eligibility(const std::string& student_id, const AcademicPeriod& period,
                                        ledger::Action action) const;

  // Runs `fn(snapshot)` in GENERATING_REPORTS; transactions keep flowing.
  template <typename Fn>
  auto with_report_snapshot(Fn&& fn) {
    ReportScope scope(*this);
    return fn(store_.snapshot_view());
  }

  store::Store& store() { return store_; }
  const Clock& clock() const { return clock_; }

 private:
  class ReportScope {
   public:
    explicit ReportScope(Engine& engine);
    ~ReportScope();

   private:
    Engine& engine_;
  };

  struct Plan {
    store::BillChangeSet changes;
    enum class Outcome { Created, Replaced, Unchanged, SkippedPaid } outcome = Outcome::Unchanged;
  };

  void require_started() const;
  std::mutex& student_lock(const std::string& student_id);
  Plan plan_bill(const ledger::StudentEnrollment& student, Paycode paycode,
                 const ledger::BillStamp& stamp) const;
  std::vector<std::pair<ledger::StudentEnrollment, Paycode>> expand(const BillComputeCommand& cmd) const;

  store::Store& store_;
  const Clock& clock_;

  mutable std::mutex state_mutex_;
  EngineState state_ = EngineState::Initializing;
  int active_reports_ = 0;

  std::array<std::mutex, 64> student_locks_;

  // Refused statuses keyed by (bank, transaction_no). Successful payments
  // are deduplicated against Tpayment_trans itself.
  // TODO: expire entries once the bank's retry window has passed.
  std::mutex memo_mutex_;
  std::unordered_map<std::string, std::pair<std::string, PaymentStatus>> refused_memo_;
};

}  // namespace tuition::ups
