#pragma once

// JSON row encodings shared by the write-ahead log and the snapshot file.

#include "json.hpp"
#include "tuition/store.hpp"

namespace tuition::store::codec {

using nlohmann::json;

json to_json(const ledger::StudentEnrollment& s);
json to_json(const ledger::CourseRegistration& r);
json to_json(const ledger::Scholarship& s);
json to_json(const ledger::TariffBook& book);
json to_json(const ledger::Bill& bill);
json to_json(const PaymentRecord& record);
json to_json(const AcademicBatch& batch);
json to_json(const BillChangeSet& changes);

ledger::StudentEnrollment enrollment_from(const json& j);
ledger::CourseRegistration registration_from(const json& j);
ledger::Scholarship scholarship_from(const json& j);
ledger::TariffBook tariff_book_from(const json& j);
ledger::Bill bill_from(const json& j);
PaymentRecord payment_record_from(const json& j);
AcademicBatch batch_from(const json& j);
BillChangeSet bill_changes_from(const json& j);

}  // namespace tuition::store::codec
