#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tuition/engine.hpp"
#include "tuition/random.hpp"
#include "tuition/store.hpp"

namespace fixtures {

using namespace tuition;

inline const AcademicPeriod kP1{2010, Semester::Regular1};
inline const AcademicPeriod kP2{2010, Semester::Regular2};
inline const AcademicPeriod kPS{2010, Semester::Short};

inline Timestamp t0() { return make_timestamp(2010, 2, 15, 9, 30, 0); }

inline ledger::TariffBook book(AcademicPeriod period, std::int64_t registration = 1'000'000,
                               std::int64_t credit = 150'000) {
  ledger::TariffBook b;
  b.period = period;
  for (const auto level : {DegreeLevel::S1, DegreeLevel::S2, DegreeLevel::S3}) {
    b.general[registration_tariff(level)] = {"registration", Idr{registration}};
    b.general[development_tariff(level)] = {"development", Idr{500'000}};
    b.general[credit_tariff(level)] = {"credit", Idr{credit}};
  }
  ledger::CourseTariff lab{"IF101", ledger::FeeItem{"LAB-IF101", Idr{200'000}}, std::nullopt,
                           ledger::FeeItem{"AST-IF101", Idr{75'000}}, std::nullopt};
  ledger::CourseTariff plain{"IF102", std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  ledger::CourseTariff studio{"AR201", std::nullopt, ledger::FeeItem{"STU-AR201", Idr{300'000}}, std::nullopt,
                              ledger::FeeItem{"TUT-AR201", Idr{50'000}}};
  b.course[lab.course_code] = lab;
  b.course[plain.course_code] = plain;
  b.course[studio.course_code] = studio;
  return b;
}

inline ledger::StudentEnrollment student(const std::string& id, AcademicPeriod period = kP1,
                                         DegreeLevel level = DegreeLevel::S1, bool pay_credits = true) {
  ledger::StudentEnrollment s;
  s.period = period;
  s.student_id = id;
  s.name = "Name " + id;
  s.degree_level = level;
  s.pay_credits = pay_credits;
  s.bill1_credits = ledger::default_bill1_credits(level);
  return s;
}

inline ledger::CourseRegistration reg(const std::string& id, const std::string& course, int credits,
                                      AcademicPeriod period = kP1, bool lab = false) {
  ledger::CourseRegistration r;
  r.period = period;
  r.student_id = id;
  r.name = "Name " + id;
  r.course_code = course;
  r.credits = credits;
  r.status_lab = lab;
  r.trans_datetime = make_timestamp(2010, 2, 1);
  return r;
}

// "S001", "S002", ...
inline std::string sid(int i) {
  std::string digits = std::to_string(i);
  return "S" + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
}

inline protocol::PaymentMessage payment(const std::string& student, Paycode code, std::int64_t amount,
                                        const std::string& tx, const std::string& bank = "014") {
  protocol::PaymentMessage p;
  p.transaction_type = TransactionType::Payment;
  p.student_id = student;
  p.paycode = code;
  p.amount = Idr{amount};
  p.bank_code = bank;
  p.transaction_no = tx;
  p.trans_datetime = t0();
  p.del_channel = DeliveryChannel::Atm;
  p.institution_code = "UNIV";
  return p;
}

inline protocol::BillRequest bill_request(const std::string& student, const std::string& tx = "TX0001") {
  return {student, tx, "014", t0(), DeliveryChannel::Atm, "UNIV"};
}

// In-memory engine, started, with its own clock.
struct Harness {
  ManualClock clock{t0()};
  std::unique_ptr<store::Store> store = store::Store::in_memory();
  ups::Engine engine{*store, clock};

  Harness() { engine.start(); }

  Idr amount_of(const std::string& id, Paycode code, AcademicPeriod period = kP1) const {
    for (const auto& b : store->get_unpaid_bills(id, period)) {
      if (b.paycode == code) return b.amount;
    }
    return Idr{-1};
  }

  void compute(Paycode code, AcademicPeriod period = kP1, std::optional<std::string> who = std::nullopt) {
    engine.run_bill_computation({{{who, code, period}}, std::nullopt});
  }
};

// Harness with students "S001".."S00n" in kP1, each with one 3-credit lab
// course on top of the base load, and BILL-1 and BILL-2 computed.
inline void seed_semester(Harness& h, int n) {
  h.engine.update_tariff(book(kP1));
  store::AcademicBatch batch;
  for (int i = 1; i <= n; ++i) {
    const std::string id = sid(i);
    batch.students.push_back(student(id));
    batch.registrations.push_back(reg(id, "IF101", 6, kP1, true));
    batch.registrations.push_back(reg(id, "IF102", 4 + i % 3));
    batch.registrations.push_back(reg(id, "AR201", 3));
  }
  h.engine.ingest_academic_data(batch);
  h.compute(Paycode::Bill1);
  h.compute(Paycode::Bill2);
}

}  // namespace fixtures
