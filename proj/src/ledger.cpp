#include "tuition/ledger.hpp"

#include <algorithm>
#include <set>

#include "tuition/error.hpp"

namespace tuition::ledger {

namespace {

Bill make_bill(const StudentEnrollment& enrollment, Paycode paycode, Idr amount,
               const BillStamp& stamp) {
  if (amount.is_negative()) {
    throw Error(ErrorCode::InvalidArgument, "negative bill amount for " + enrollment.student_id);
  }
  Bill bill;
  bill.period = enrollment.period;
  bill.student_id = enrollment.student_id;
  bill.paycode = paycode;
  bill.amount = amount;
  bill.generate_datetime = stamp.now;
  bill.due_date = stamp.due_date;
  return bill;
}

void require_regular(const AcademicPeriod& period, std::string_view what) {
  if (period.is_short()) {
    throw Error(ErrorCode::WrongSemester, std::string(what) + " is not billed in short period " +
                                              to_string(period));
  }
}

Idr flagged_fee(const std::optional<FeeItem>& fee, bool flag, std::string_view kind,
                const std::string& course) {
  if (!flag) return Idr{0};
  if (!fee) {
    throw Error(ErrorCode::MissingTariff,
                std::string(kind) + " fee flagged but not tariffed for course " + course);
  }
  return fee->amount;
}

}  // namespace

int default_bill1_credits(DegreeLevel level) { return level == DegreeLevel::S1 ? 10 : 5; }

Idr TariffBook::general_amount(TariffId id) const {
  const auto it = general.find(id);
  if (it == general.end()) {
    throw Error(ErrorCode::MissingTariff,
                std::string(to_string(id)) + " not set for " + to_string(period));
  }
  return it->second.amount;
}

Idr FinePolicy::fine_for(Idr bill_amount) const {
  if (mode == Mode::Flat) return flat_amount;
  // Half-up rounding of amount * bp / 10000 on non-negative operands.
  const __int128 scaled = static_cast<__int128>(bill_amount.value()) * percent_bp + 5000;
  const __int128 fine = scaled / 10000;
  if (fine > INT64_MAX) throw Error(ErrorCode::Overflow, "fine amount overflow");
  return Idr{static_cast<std::int64_t>(fine)};
}

Bill compute_bill1(const StudentEnrollment& enrollment, const TariffBook& tariffs,
                   const BillStamp& stamp) {
  require_regular(enrollment.period, "BILL-1");
  const Idr registration = tariffs.general_amount(registration_tariff(enrollment.degree_level));
  Idr amount = registration;
  if (enrollment.pay_credits) {
    const Idr credit = tariffs.general_amount(credit_tariff(enrollment.degree_level));
    amount += credit * enrollment.bill1_credits;
  }
  return make_bill(enrollment, Paycode::Bill1, amount, stamp);
}

Idr compute_total_semester_bill(const StudentEnrollment& enrollment,
                                std::span<const CourseRegistration> registrations,
                                const TariffBook& tariffs) {
  Idr total = tariffs.general_amount(registration_tariff(enrollment.degree_level));
  if (registrations.empty()) return total;

  const Idr credit = tariffs.general_amount(credit_tariff(enrollment.degree_level));
  for (const auto& reg : registrations) {
    if (reg.student_id != enrollment.student_id || reg.period != enrollment.period) {
      throw Error(ErrorCode::ForeignRegistration,
                  reg.course_code + " registered by " + reg.student_id + " in " +
                      to_string(reg.period));
    }
    total += credit * reg.credits;
    if (!(reg.status_lab || reg.status_studio || reg.status_assist || reg.status_tutor)) continue;
    const auto it = tariffs.course.find(reg.course_code);
    if (it == tariffs.course.end()) {
      throw Error(ErrorCode::MissingTariff, "no course tariff for " + reg.course_code);
    }
    const CourseTariff& fees = it->second;
    total += flagged_fee(fees.lab, reg.status_lab, "lab", reg.course_code);
    total += flagged_fee(fees.studio, reg.status_studio, "studio", reg.course_code);
    total += flagged_fee(fees.assist, reg.status_assist, "assist", reg.course_code);
    total += flagged_fee(fees.tutor, reg.status_tutor, "tutor", reg.course_code);
  }
  return total;
}

Bill compute_bill2(const StudentEnrollment& enrollment, Idr total, Idr bill1_amount,
                   Idr scholarship_total, const BillStamp& stamp) {
  require_regular(enrollment.period, "BILL-2");
  if (total.is_negative() || bill1_amount.is_negative() || scholarship_total.is_negative()) {
    throw Error(ErrorCode::InvalidArgument, "negative input to BILL-2");
  }
  const Idr remainder = max(Idr{0}, total - bill1_amount - scholarship_total);
  Bill bill = make_bill(enrollment, Paycode::Bill2, remainder, stamp);
  if (remainder.is_zero()) {
    bill.paid_status = true;
    bill.datetime_paid = stamp.now;
  }
  return bill;
}

Bill compute_bill3(const StudentEnrollment& enrollment,
                   std::span<const CourseRegistration> registrations, const TariffBook& tariffs,
                   const BillStamp& stamp) {
  if (!enrollment.period.is_short()) {
    throw Error(ErrorCode::WrongSemester,
                "BILL-SS requested for regular period " + to_string(enrollment.period));
  }
  return make_bill(enrollment, Paycode::BillSS,
                   compute_total_semester_bill(enrollment, registrations, tariffs), stamp);
}

Idr scholarship_total(std::span<const Scholarship> scholarships) {
  Idr total{0};
  for (const auto& s : scholarships) total += s.amount;
  return total;
}

std::vector<Bill> apply_fines(std::span<const Bill> bills, const FinePolicy& policy,
                              Timestamp now) {
  std::set<std::pair<AcademicPeriod, Paycode>> fined;
  for (const auto& bill : bills) {
    if (is_fine(bill.paycode)) fined.emplace(bill.period, bill.paycode);
  }

  std::vector<Bill> fines;
  for (const auto& bill : bills) {
    const auto fine_code = fine_for(bill.paycode);
    if (!fine_code || !bill.outstanding() || now <= bill.due_date) continue;
    if (!fined.emplace(bill.period, *fine_code).second) continue;
    Bill fine;
    fine.period = bill.period;
    fine.student_id = bill.student_id;
    fine.paycode = *fine_code;
    fine.amount = policy.fine_for(bill.amount);
    fine.generate_datetime = now;
    fine.due_date = now;
    if (fine.amount.is_zero()) {
      fine.paid_status = true;
      fine.datetime_paid = now;
    }
    fines.push_back(std::move(fine));
  }
  return fines;
}

DueBillRollover roll_due_bill(std::span<const Bill> unpaid, AcademicPeriod next_period,
                              const BillStamp& stamp) {
  if (unpaid.empty()) throw Error(ErrorCode::EmptyInput, "no unpaid bills to roll over");
  const AcademicPeriod source = unpaid.front().period;
  const std::string& student = unpaid.front().student_id;
  if (next_period <= source) {
    throw Error(ErrorCode::InvalidArgument, "DUE-BILL period must follow " + to_string(source));
  }

  DueBillRollover out;
  Idr total{0};
  for (const auto& bill : unpaid) {
    if (!bill.outstanding() || bill.period != source || bill.student_id != student) {
      throw Error(ErrorCode::InvalidArgument,
                  "rollover input must be outstanding bills of one student and period");
    }
    total += bill.amount;
    Bill tomb = bill;
    tomb.superseded = true;
    out.superseded.push_back(std::move(tomb));
  }

  out.due_bill.period = next_period;
  out.due_bill.student_id = student;
  out.due_bill.paycode = Paycode::DueBill;
  out.due_bill.amount = total;
  out.due_bill.generate_datetime = stamp.now;
  out.due_bill.due_date = stamp.due_date;
  if (total.is_zero()) {
    out.due_bill.paid_status = true;
    out.due_bill.datetime_paid = stamp.now;
  }
  return out;
}

std::string_view to_string(Action action) {
  switch (action) {
    case Action::CourseRegistration: return "COURSE_REGISTRATION";
    case Action::MidtermExam: return "MIDTERM_EXAM";
    case Action::ViewGrades: return "VIEW_GRADES";
  }
  return "";
}

std::optional<Action> parse_action(std::string_view text) {
  for (auto a : {Action::CourseRegistration, Action::MidtermExam, Action::ViewGrades}) {
    if (to_string(a) == text) return a;
  }
  return std::nullopt;
}

std::string Eligibility::to_string() const {
  if (allowed) return "ALLOWED";
  return "BLOCKED(" + reason + ")";
}

Eligibility check_eligibility(const std::string& student_id, const AcademicPeriod& period,
                              Action action, std::span<const Bill> bills, bool dispensation) {
  if (dispensation) return Eligibility::allow();

  auto blocks = [&](const Bill& bill) {
    if (bill.student_id != student_id || !bill.outstanding()) return false;
    switch (action) {
      case Action::CourseRegistration:
        return (bill.paycode == Paycode::DueBill && bill.period <= period) ||
               (bill.paycode == Paycode::Bill1 && bill.period == period);
      case Action::MidtermExam:
        if (bill.period != period) return false;
        if (period.is_short()) return bill.paycode == Paycode::BillSS;
        return bill.paycode == Paycode::Bill1 || bill.paycode == Paycode::Bill2;
      case Action::ViewGrades:
        return bill.period == period;
    }
    return false;
  };

  std::optional<Paycode> first;
  for (const auto& bill : bills) {
    if (blocks(bill) && (!first || bill.paycode < *first)) first = bill.paycode;
  }
  if (!first) return Eligibility::allow();
  return Eligibility{false, first,
                     std::string(to_string(*first)) + " unpaid, " +
                         std::string(ledger::to_string(action)) + " not allowed"};
}

}  // namespace tuition::ledger
