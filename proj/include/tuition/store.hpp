#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "tuition/ledger.hpp"
#include "tuition/protocol.hpp"

namespace tuition::store {

// One Tpayment_trans row. Only the reversal fields ever change, once.
struct PaymentRecord {
  protocol::PaymentMessage payment;
  Timestamp recorded_at;
  // The bill this payment settled.
  AcademicPeriod bill_period;
  std::uint32_t bill_generation = 0;
  bool reversed = false;
  std::optional<protocol::PaymentMessage> reversal;
  std::optional<Timestamp> reversed_at;

  friend bool operator==(const PaymentRecord&, const PaymentRecord&) = default;
};

std::string transaction_key(std::string_view bank_code, std::string_view transaction_no);

// A student's Tstd_bill rows co-located with the identities of the payments
// made against them, so the payment path needs a single keyed lookup.
struct StudentAccount {
  std::vector<ledger::Bill> bills;
  // transaction_key -> latest Tpayment_trans row with that identity.
  std::unordered_map<std::string, std::size_t> payments;
};

using StudentKey = std::pair<AcademicPeriod, std::string>;
using RegistrationKey = std::tuple<AcademicPeriod, std::string, std::string>;
using ScholarshipKey = std::tuple<AcademicPeriod, std::string, std::string>;

struct TableSet {
  std::map<StudentKey, ledger::StudentEnrollment> student_active;
  std::map<RegistrationKey, ledger::CourseRegistration> course_regis;
  std::map<ScholarshipKey, ledger::Scholarship> std_scholarship;
  // Tgeneral_tariff and Tcourse_tariff, grouped per academic period.
  std::map<AcademicPeriod, ledger::TariffBook> tariffs;
  std::unordered_map<std::string, StudentAccount> std_bill;
  std::vector<PaymentRecord> payment_trans;
  // student_id -> number of periods the student is active in.
  std::unordered_map<std::string, int> known_students;

  std::size_t bill_count() const;
  std::vector<ledger::Bill> all_bills() const;
};

struct AcademicBatch {
  std::vector<ledger::StudentEnrollment> students;
  std::vector<ledger::CourseRegistration> registrations;
  std::vector<ledger::Scholarship> scholarships;

  bool empty() const { return students.empty() && registrations.empty() && scholarships.empty(); }
};

struct UpsertSummary {
  std::size_t inserted = 0;
  std::size_t updated = 0;
  std::size_t unchanged = 0;

  std::size_t changes() const { return inserted + updated; }
};

// Atomic change to one student's bills: retire the listed generations and
// add the new rows.
struct BillChangeSet {
  std::string student_id;
  std::vector<ledger::Bill> superseded;
  std::vector<ledger::Bill> inserted;

  bool empty() const { return superseded.empty() && inserted.empty(); }
};

// Counters for the access-path guarantees of the hot path.
struct AccessStats {
  std::uint64_t keyed_lookups = 0;
  std::uint64_t log_appends = 0;
};

enum class CrashPoint { BeforeWrite, TornWrite, AfterWrite };

// Test hook: abort the process image at a WAL boundary.
struct CrashPlan {
  std::uint64_t at_sequence = 0;
  CrashPoint point = CrashPoint::BeforeWrite;
};

struct SimulatedCrash : std::exception {
  const char* what() const noexcept override { return "simulated crash"; }
};

struct StoreOptions {
  bool fsync = false;
  std::optional<CrashPlan> crash;
};

struct SnapshotContents {
  TableSet tables;
  std::uint64_t wal_sequence = 0;
};

std::vector<std::uint8_t> encode_snapshot(const TableSet& tables, std::uint64_t wal_sequence);
// Throws Error{CorruptSnapshot}.
SnapshotContents decode_snapshot(const std::vector<std::uint8_t>& bytes);

// Canonical text of the logical state; equal states give equal text.
std::string dump(const TableSet& tables);

class Store {
 public:
  static constexpr const char* kWalFile = "wal.log";
  static constexpr const char* kSnapshotFile = "snapshot.bin";

  // Volatile store with no log.
  static std::unique_ptr<Store> in_memory();
  // Loads the snapshot, replays the log, and drops a torn tail record.
  static std::unique_ptr<Store> open(const std::filesystem::path& dir, StoreOptions options = {});

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;
  ~Store();

  // --- reads ---------------------------------------------------------------
  std::vector<ledger::Bill> get_unpaid_bills(const std::string& student_id,
                                             std::optional<AcademicPeriod> period = {}) const;
  std::vector<ledger::Bill> bills_of(const std::string& student_id) const;
  // Bills plus the row of a payment identity, in one lookup.
  struct AccountView {
    std::vector<ledger::Bill> bills;
    std::optional<PaymentRecord> payment;
  };
  AccountView account_view(const std::string& student_id, const std::string& txkey) const;

  bool is_known_student(const std::string& student_id) const;
  std::optional<ledger::StudentEnrollment> enrollment(const AcademicPeriod& period,
                                                      const std::string& student_id) const;
  std::vector<ledger::StudentEnrollment> students_in(const AcademicPeriod& period) const;
  std::vector<ledger::CourseRegistration> registrations_of(const AcademicPeriod& period,
                                                           const std::string& student_id) const;
  std::vector<ledger::Scholarship> scholarships_of(const AcademicPeriod& period,
                                                   const std::string& student_id) const;
  std::optional<ledger::TariffBook> tariff_book(const AcademicPeriod& period) const;

  // Consistent copy for reports.
  TableSet snapshot_view() const;
  std::string dump() const;
  AccessStats stats() const;
  std::uint64_t wal_sequence() const;

  // --- mutations: logged before they are applied ---------------------------
  // Appends the payment and marks its bill paid in one record. Throws
  // DuplicateTransaction, BillNotFound or BillAlreadyPaid.
  void commit_payment(const PaymentRecord& record);
  // Flags the matching live payment reversed and reopens its bill.
  // Returns false when nothing matches.
  bool commit_reversal(const protocol::PaymentMessage& reversal, Timestamp at);
  void commit_bill_changes(const BillChangeSet& changes);
  UpsertSummary upsert_academic(const AcademicBatch& batch);
  // Returns true when the stored book changed.
  bool replace_tariffs(const ledger::TariffBook& book);

  // Writes snapshot.bin and empties the log.
  void checkpoint();

 private:
  Store() = default;

  void append_log(const std::string& body);
  void apply_record(const std::string& body, bool validate_only);
  void apply_payment(const PaymentRecord& record);
  bool apply_reversal(const protocol::PaymentMessage& reversal, Timestamp at, bool dry_run);
  void apply_bill_changes(const BillChangeSet& changes);
  UpsertSummary apply_academic(const AcademicBatch& batch, bool dry_run);
  bool apply_tariffs(const ledger::TariffBook& book, bool dry_run);
  void check_payment(const PaymentRecord& record) const;
  void check_bill_changes(const BillChangeSet& changes) const;
  void count_lookup() const { lookups_.fetch_add(1, std::memory_order_relaxed); }
  void throw_if_crashed() const;

  mutable std::shared_mutex mutex_;
  TableSet tables_;
  std::optional<std::filesystem::path> dir_;
  std::FILE* wal_ = nullptr;
  std::uint64_t sequence_ = 0;
  StoreOptions options_;
  bool crashed_ = false;
  mutable std::atomic<std::uint64_t> lookups_{0};
  std::atomic<std::uint64_t> appends_{0};
};

}  // namespace tuition::store
