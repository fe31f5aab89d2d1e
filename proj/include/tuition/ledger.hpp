#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tuition/money.hpp"
#include "tuition/time.hpp"
#include "tuition/types.hpp"

namespace tuition::ledger {

// Base credits billed in Bill-1 when no override is ingested.
int default_bill1_credits(DegreeLevel level);

struct StudentEnrollment {
  AcademicPeriod period;
  std::string student_id;
  std::string name;
  DegreeLevel degree_level = DegreeLevel::S1;
  bool pay_credits = true;
  int bill1_credits = 10;
  // Approved payment delay; lifts every eligibility block.
  bool dispensation = false;

  friend bool operator==(const StudentEnrollment&, const StudentEnrollment&) = default;
};

struct FeeItem {
  std::string code;
  Idr amount;

  friend bool operator==(const FeeItem&, const FeeItem&) = default;
};

// Per-course fees. An absent item means the course has no such fee.
struct CourseTariff {
  std::string course_code;
  std::optional<FeeItem> lab;
  std::optional<FeeItem> studio;
  std::optional<FeeItem> assist;
  std::optional<FeeItem> tutor;

  friend bool operator==(const CourseTariff&, const CourseTariff&) = default;
};

struct GeneralTariff {
  std::string description;
  Idr amount;

  friend bool operator==(const GeneralTariff&, const GeneralTariff&) = default;
};

struct TariffBook {
  AcademicPeriod period;
  std::map<TariffId, GeneralTariff> general;
  std::map<std::string, CourseTariff> course;

  // Throws ErrorCode::MissingTariff.
  Idr general_amount(TariffId id) const;

  friend bool operator==(const TariffBook&, const TariffBook&) = default;
};

struct CourseRegistration {
  AcademicPeriod period;
  std::string student_id;
  std::string name;
  std::string course_code;
  int credits = 0;
  bool status_lab = false;
  bool status_studio = false;
  bool status_assist = false;
  bool status_tutor = false;
  Timestamp trans_datetime;

  friend bool operator==(const CourseRegistration&, const CourseRegistration&) = default;
};

struct Scholarship {
  AcademicPeriod period;
  std::string student_id;
  std::string name;
  std::string scholarship_code;
  Idr amount;

  friend bool operator==(const Scholarship&, const Scholarship&) = default;
};

struct Bill {
  AcademicPeriod period;
  std::string student_id;
  Paycode paycode = Paycode::Bill1;
  Idr amount;
  Timestamp generate_datetime;
  Timestamp due_date;
  bool paid_status = false;
  std::optional<Timestamp> datetime_paid;
  // Replacement counter within (period, student, paycode); superseded
  // generations stay in the table for audit.
  std::uint32_t generation = 0;
  // Replaced by a newer generation or rolled into a DUE-BILL.
  bool superseded = false;

  // Payable right now: neither paid nor superseded.
  bool outstanding() const { return !paid_status && !superseded; }

  friend bool operator==(const Bill&, const Bill&) = default;
};

// Header shared by every computed bill.
struct BillStamp {
  Timestamp now;
  Timestamp due_date;
};

struct FinePolicy {
  enum class Mode { Flat, Percent };
  Mode mode = Mode::Flat;
  Idr flat_amount{100'000};
  std::int64_t percent_bp = 0;

  static FinePolicy flat(Idr amount) { return {Mode::Flat, amount, 0}; }
  static FinePolicy percent(std::int64_t basis_points) { return {Mode::Percent, Idr{0}, basis_points}; }

  Idr fine_for(Idr bill_amount) const;
};

Bill compute_bill1(const StudentEnrollment& enrollment, const TariffBook& tariffs,
                   const BillStamp& stamp);

// Registration + credits + flagged per-course fees.
Idr compute_total_semester_bill(const StudentEnrollment& enrollment,
                                std::span<const CourseRegistration> registrations,
                                const TariffBook& tariffs);

// Clamped at zero; a zero bill is created already paid.
Bill compute_bill2(const StudentEnrollment& enrollment, Idr total, Idr bill1_amount,
                   Idr scholarship_total, const BillStamp& stamp);

Bill compute_bill3(const StudentEnrollment& enrollment,
                   std::span<const CourseRegistration> registrations, const TariffBook& tariffs,
                   const BillStamp& stamp);

Idr scholarship_total(std::span<const Scholarship> scholarships);

// Returns only the newly emitted fines. Calling again with the union of the
// input and the result emits nothing.
std::vector<Bill> apply_fines(std::span<const Bill> bills, const FinePolicy& policy,
                              Timestamp now);

struct DueBillRollover {
  Bill due_bill;
  std::vector<Bill> superseded;
};

DueBillRollover roll_due_bill(std::span<const Bill> unpaid, AcademicPeriod next_period,
                              const BillStamp& stamp);

enum class Action { CourseRegistration, MidtermExam, ViewGrades };
std::string_view to_string(Action action);
std::optional<Action> parse_action(std::string_view text);

struct Eligibility {
  bool allowed = true;
  std::optional<Paycode> blocking;
  std::string reason;

  static Eligibility allow() { return {}; }
  std::string to_string() const;

  friend bool operator==(const Eligibility&, const Eligibility&) = default;
};

Eligibility check_eligibility(const std::string& student_id, const AcademicPeriod& period,
                              Action action, std::span<const Bill> bills, bool dispensation = false);

}  // namespace tuition::ledger
