#include "store_codec.hpp"

#include "tuition/error.hpp"

namespace tuition::store::codec {

namespace {

template <typename T>
T require(std::optional<T> value, std::string_view what) {
  if (!value) throw Error(ErrorCode::InvalidField, "bad " + std::string(what) + " in stored row");
  return *value;
}

AcademicPeriod period_from(const json& j) {
  return require(parse_period(j.get<std::string>()), "period");
}

json fee_json(const std::optional<ledger::FeeItem>& fee) {
  if (!fee) return nullptr;
  return json{{"code", fee->code}, {"amount", fee->amount.value()}};
}

std::optional<ledger::FeeItem> fee_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return ledger::FeeItem{j.at("code").get<std::string>(), Idr{j.at("amount").get<std::int64_t>()}};
}

protocol::PaymentMessage payment_from_line(const json& j) {
  auto message = protocol::decode(j.get<std::string>());
  auto* payment = std::get_if<protocol::PaymentMessage>(&message);
  if (!payment) throw Error(ErrorCode::InvalidField, "stored payment is not a PAYMENT/REVERSAL line");
  return *payment;
}

}  // namespace

json to_json(const ledger::StudentEnrollment& s) {
  return {{"period", to_string(s.period)},          {"student", s.student_id},
          {"name", s.name},                         {"degree", std::string(to_string(s.degree_level))},
          {"pay_credits", s.pay_credits},           {"bill1_credits", s.bill1_credits},
          {"dispensation", s.dispensation}};
}

ledger::StudentEnrollment enrollment_from(const json& j) {
  ledger::StudentEnrollment s;
  s.period = period_from(j.at("period"));
  s.student_id = j.at("student").get<std::string>();
  s.name = j.at("name").get<std::string>();
  s.degree_level = require(parse_degree(j.at("degree").get<std::string>()), "degree");
  s.pay_credits = j.at("pay_credits").get<bool>();
  s.bill1_credits = j.at("bill1_credits").get<int>();
  s.dispensation = j.at("dispensation").get<bool>();
  return s;
}

json to_json(const ledger::CourseRegistration& r) {
  return {{"period", to_string(r.period)}, {"student", r.student_id},  {"name", r.name},
          {"course", r.course_code},       {"credits", r.credits},     {"lab", r.status_lab},
          {"studio", r.status_studio},     {"assist", r.status_assist}, {"tutor", r.status_tutor},
          {"at", r.trans_datetime.ms}};
}

ledger::CourseRegistration registration_from(const json& j) {
  ledger::CourseRegistration r;
  r.period = period_from(j.at("period"));
  r.student_id = j.at("student").get<std::string>();
  r.name = j.at("name").get<std::string>();
  r.course_code = j.at("course").get<std::string>();
  r.credits = j.at("credits").get<int>();
  r.status_lab = j.at("lab").get<bool>();
  r.status_studio = j.at("studio").get<bool>();
  r.status_assist = j.at("assist").get<bool>();
  r.status_tutor = j.at("tutor").get<bool>();
  r.trans_datetime = Timestamp{j.at("at").get<std::int64_t>()};
  return r;
}

json to_json(const ledger::Scholarship& s) {
  return {{"period", to_string(s.period)}, {"student", s.student_id}, {"name", s.name},
          {"code", s.scholarship_code},    {"amount", s.amount.value()}};
}

ledger::Scholarship scholarship_from(const json& j) {
  ledger::Scholarship s;
  s.period = period_from(j.at("period"));
  s.student_id = j.at("student").get<std::string>();
  s.name = j.at("name").get<std::string>();
  s.scholarship_code = j.at("code").get<std::string>();
  s.amount = Idr{j.at("amount").get<std::int64_t>()};
  return s;
}

json to_json(const ledger::TariffBook& book) {
  json general = json::array();
  for (const auto& [id, tariff] : book.general) {
    general.push_back({{"id", std::string(to_string(id))},
                       {"description", tariff.description},
                       {"amount", tariff.amount.value()}});
  }
  json course = json::array();
  for (const auto& [code, fees] : book.course) {
    course.push_back({{"course", code},
                      {"lab", fee_json(fees.lab)},
                      {"studio", fee_json(fees.studio)},
                      {"assist", fee_json(fees.assist)},
                      {"tutor", fee_json(fees.tutor)}});
  }
  return {{"period", to_string(book.period)}, {"general", general}, {"course", course}};
}

ledger::TariffBook tariff_book_from(const json& j) {
  ledger::TariffBook book;
  book.period = period_from(j.at("period"));
  for (const auto& g : j.at("general")) {
    const auto id = require(parse_tariff_id(g.at("id").get<std::string>()), "tariff id");
    book.general[id] = {g.at("description").get<std::string>(), Idr{g.at("amount").get<std::int64_t>()}};
  }
  for (const auto& c : j.at("course")) {
    ledger::CourseTariff fees;
    fees.course_code = c.at("course").get<std::string>();
    fees.lab = fee_from(c.at("lab"));
    fees.studio = fee_from(c.at("studio"));
    fees.assist = fee_from(c.at("assist"));
    fees.tutor = fee_from(c.at("tutor"));
    book.course[fees.course_code] = std::move(fees);
  }
  return book;
}

json to_json(const ledger::Bill& b) {
  return {{"period", to_string(b.period)},
          {"student", b.student_id},
          {"paycode", std::string(to_string(b.paycode))},
          {"amount", b.amount.value()},
          {"generated", b.generate_datetime.ms},
          {"due", b.due_date.ms},
          {"paid", b.paid_status},
          {"paid_at", b.datetime_paid ? json(b.datetime_paid->ms) : json(nullptr)},
          {"generation", b.generation},
          {"superseded", b.superseded}};
}

ledger::Bill bill_from(const json& j) {
  ledger::Bill b;
  b.period = period_from(j.at("period"));
  b.student_id = j.at("student").get<std::string>();
  b.paycode = require(parse_paycode(j.at("paycode").get<std::string>()), "paycode");
  b.amount = Idr{j.at("amount").get<std::int64_t>()};
  b.generate_datetime = Timestamp{j.at("generated").get<std::int64_t>()};
  b.due_date = Timestamp{j.at("due").get<std::int64_t>()};
  b.paid_status = j.at("paid").get<bool>();
  if (!j.at("paid_at").is_null()) b.datetime_paid = Timestamp{j.at("paid_at").get<std::int64_t>()};
  b.generation = j.at("generation").get<std::uint32_t>();
  b.superseded = j.at("superseded").get<bool>();
  return b;
}

json to_json(const PaymentRecord& r) {
  return {{"wire", protocol::encode(r.payment)},
          {"recorded_at", r.recorded_at.ms},
          {"bill_period", to_string(r.bill_period)},
          {"bill_generation", r.bill_generation},
          {"reversed", r.reversed},
          {"reversal", r.reversal ? json(protocol::encode(*r.reversal)) : json(nullptr)},
          {"reversed_at", r.reversed_at ? json(r.reversed_at->ms) : json(nullptr)}};
}

PaymentRecord payment_record_from(const json& j) {
  PaymentRecord r;
  r.payment = payment_from_line(j.at("wire"));
  r.recorded_at = Timestamp{j.at("recorded_at").get<std::int64_t>()};
  r.bill_period = period_from(j.at("bill_period"));
  r.bill_generation = j.at("bill_generation").get<std::uint32_t>();
  r.reversed = j.at("reversed").get<bool>();
  if (!j.at("reversal").is_null()) r.reversal = payment_from_line(j.at("reversal"));
  if (!j.at("reversed_at").is_null()) r.reversed_at = Timestamp{j.at("reversed_at").get<std::int64_t>()};
  return r;
}

json to_json(const AcademicBatch& batch) {
  json students = json::array(), regs = json::array(), scholarships = json::array();
  for (const auto& s : batch.students) students.push_back(to_json(s));
  for (const auto& r : batch.registrations) regs.push_back(to_json(r));
  for (const auto& s : batch.scholarships) scholarships.push_back(to_json(s));
  return {{"students", students}, {"registrations", regs}, {"scholarships", scholarships}};
}

AcademicBatch batch_from(const json& j) {
  AcademicBatch batch;
  for (const auto& s : j.at("students")) batch.students.push_back(enrollment_from(s));
  for (const auto& r : j.at("registrations")) batch.registrations.push_back(registration_from(r));
  for (const auto& s : j.at("scholarships")) batch.scholarships.push_back(scholarship_from(s));
  return batch;
}

json to_json(const BillChangeSet& changes) {
  json superseded = json::array(), inserted = json::array();
  for (const auto& b : changes.superseded) superseded.push_back(to_json(b));
  for (const auto& b : changes.inserted) inserted.push_back(to_json(b));
  return {{"student", changes.student_id}, {"superseded", superseded}, {"inserted", inserted}};
}

BillChangeSet bill_changes_from(const json& j) {
  BillChangeSet changes;
  changes.student_id = j.at("student").get<std::string>();
  for (const auto& b : j.at("superseded")) changes.superseded.push_back(bill_from(b));
  for (const auto& b : j.at("inserted")) changes.inserted.push_back(bill_from(b));
  return changes;
}

}  // namespace tuition::store::codec
