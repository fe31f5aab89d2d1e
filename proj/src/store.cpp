#include "tuition/store.hpp"

#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <unistd.h>

#include "store_codec.hpp"
#include "tuition/error.hpp"

namespace tuition::store {

namespace fs = std::filesystem;
using codec::json;

namespace {

constexpr char kSnapshotMagic[8] = {'T', 'L', 'S', 'N', 'A', 'P', '0', '1'};
constexpr std::uint32_t kSnapshotEnd = 0xFFFFFFFFu;

std::uint32_t crc_of(std::string_view data) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint64_t get_le(const std::vector<std::uint8_t>& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
  return v;
}

ledger::Bill* find_bill(StudentAccount& account, const AcademicPeriod& period, Paycode paycode,
                        std::uint32_t generation) {
  for (auto& bill : account.bills) {
    if (bill.period == period && bill.paycode == paycode && bill.generation == generation) {
      return &bill;
    }
  }
  return nullptr;
}

const ledger::Bill* find_bill(const StudentAccount& account, const AcademicPeriod& period,
                              Paycode paycode, std::uint32_t generation) {
  return find_bill(const_cast<StudentAccount&>(account), period, paycode, generation);
}

bool paycode_fits_period(Paycode code, const AcademicPeriod& period) {
  const bool short_only = code == Paycode::BillSS || code == Paycode::FineSS;
  const bool regular_only = code == Paycode::Bill1 || code == Paycode::Bill2 ||
                            code == Paycode::Fine1 || code == Paycode::Fine2;
  return period.is_short() ? !regular_only : !short_only;
}

bool clean_text(std::string_view s) {
  return !s.empty() && s.find_first_of(",|\t\r\n") == std::string_view::npos;
}

template <typename Fn>
void for_each_row(const TableSet& t, Fn&& fn) {
  for (const auto& [key, s] : t.student_active) fn(json{{"t", "student"}, {"row", codec::to_json(s)}});
  for (const auto& [key, r] : t.course_regis) fn(json{{"t", "registration"}, {"row", codec::to_json(r)}});
  for (const auto& [key, s] : t.std_scholarship) fn(json{{"t", "scholarship"}, {"row", codec::to_json(s)}});
  for (const auto& [period, book] : t.tariffs) fn(json{{"t", "tariff"}, {"row", codec::to_json(book)}});
  std::vector<const std::string*> students;
  students.reserve(t.std_bill.size());
  for (const auto& [id, account] : t.std_bill) students.push_back(&id);
  std::sort(students.begin(), students.end(), [](auto* a, auto* b) { return *a < *b; });
  for (const auto* id : students) {
    for (const auto& bill : t.std_bill.at(*id).bills) {
      fn(json{{"t", "bill"}, {"row", codec::to_json(bill)}});
    }
  }
  for (const auto& p : t.payment_trans) fn(json{{"t", "payment"}, {"row", codec::to_json(p)}});
}

void rebuild_indexes(TableSet& t) {
  t.known_students.clear();
  for (const auto& [key, s] : t.student_active) ++t.known_students[key.second];
  for (auto& [id, account] : t.std_bill) account.payments.clear();
  for (std::size_t i = 0; i < t.payment_trans.size(); ++i) {
    const auto& p = t.payment_trans[i].payment;
    auto& slot = t.std_bill[p.student_id].payments[transaction_key(p.bank_code, p.transaction_no)];
    slot = i;
  }
}

std::string payment_body(const PaymentRecord& r) {
  return "PAY\t" + std::to_string(r.recorded_at.ms) + "\t" + to_string(r.bill_period) + "\t" +
         std::to_string(r.bill_generation) + "\t" + protocol::encode(r.payment);
}

std::vector<std::string_view> split_tabs(std::string_view s, std::size_t max_parts) {
  std::vector<std::string_view> parts;
  while (parts.size() + 1 < max_parts) {
    const auto tab = s.find('\t');
    if (tab == std::string_view::npos) break;
    parts.push_back(s.substr(0, tab));
    s.remove_prefix(tab + 1);
  }
  parts.push_back(s);
  return parts;
}

std::int64_t parse_i64(std::string_view s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::CorruptLog, "bad integer in log record");
  }
  return v;
}

}  // namespace

std::string transaction_key(std::string_view bank_code, std::string_view transaction_no) {
  std::string key(bank_code);
  key += '\x1f';
  key += transaction_no;
  return key;
}

std::size_t TableSet::bill_count() const {
  std::size_t n = 0;
  for (const auto& [id, account] : std_bill) n += account.bills.size();
  return n;
}

std::vector<ledger::Bill> TableSet::all_bills() const {
  std::vector<ledger::Bill> out;
  for (const auto& [id, account] : std_bill) {
    out.insert(out.end(), account.bills.begin(), account.bills.end());
  }
  std::sort(out.begin(), out.end(), [](const ledger::Bill& a, const ledger::Bill& b) {
    return std::tie(a.period, a.student_id, a.paycode, a.generation) <
           std::tie(b.period, b.student_id, b.paycode, b.generation);
  });
  return out;
}

// --- snapshot ----------------------------------------------------------------

std::vector<std::uint8_t> encode_snapshot(const TableSet& tables, std::uint64_t wal_sequence) {
  std::vector<std::uint8_t> out(std::begin(kSnapshotMagic), std::end(kSnapshotMagic));
  put_u64(out, wal_sequence);
  for_each_row(tables, [&](const json& row) {
    const std::string text = row.dump();
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
  });
  put_u32(out, kSnapshotEnd);
  const std::string_view body(reinterpret_cast<const char*>(out.data()), out.size());
  put_u32(out, crc_of(body));
  return out;
}

SnapshotContents decode_snapshot(const std::vector<std::uint8_t>& bytes) {
  auto corrupt = [](const std::string& why) { return Error(ErrorCode::CorruptSnapshot, why); };
  if (bytes.size() < sizeof kSnapshotMagic + 8 + 8) throw corrupt("file too short");
  if (std::memcmp(bytes.data(), kSnapshotMagic, sizeof kSnapshotMagic) != 0) {
    throw corrupt("bad magic");
  }
  const std::size_t crc_pos = bytes.size() - 4;
  const std::string_view body(reinterpret_cast<const char*>(bytes.data()), crc_pos);
  if (crc_of(body) != static_cast<std::uint32_t>(get_le(bytes, crc_pos, 4))) {
    throw corrupt("checksum mismatch");
  }

  SnapshotContents out;
  out.wal_sequence = get_le(bytes, sizeof kSnapshotMagic, 8);
  std::size_t pos = sizeof kSnapshotMagic + 8;
  TableSet& t = out.tables;
  try {
    while (true) {
      if (pos + 4 > crc_pos) throw corrupt("truncated record header");
      const auto len = static_cast<std::uint32_t>(get_le(bytes, pos, 4));
      pos += 4;
      if (len == kSnapshotEnd) break;
      if (pos + len > crc_pos) throw corrupt("record overruns file");
      const json row = json::parse(body.substr(pos, len));
      pos += len;
      const std::string type = row.at("t").get<std::string>();
      const json& r = row.at("row");
      if (type == "student") {
        auto s = codec::enrollment_from(r);
        t.student_active[{s.period, s.student_id}] = s;
      } else if (type == "registration") {
        auto reg = codec::registration_from(r);
        t.course_regis[{reg.period, reg.student_id, reg.course_code}] = reg;
      } else if (type == "scholarship") {
        auto s = codec::scholarship_from(r);
        t.std_scholarship[{s.period, s.student_id, s.scholarship_code}] = s;
      } else if (type == "tariff") {
        auto book = codec::tariff_book_from(r);
        t.tariffs[book.period] = book;
      } else if (type == "bill") {
        auto bill = codec::bill_from(r);
        t.std_bill[bill.student_id].bills.push_back(std::move(bill));
      } else if (type == "payment") {
        t.payment_trans.push_back(codec::payment_record_from(r));
      } else {
        throw corrupt("unknown row type " + type);
      }
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptSnapshot) throw;
    throw corrupt(e.what());
  } catch (const json::exception& e) {
    throw corrupt(e.what());
  }
  if (pos != crc_pos) throw corrupt("trailing bytes after end marker");
  rebuild_indexes(t);
  return out;
}

std::string dump(const TableSet& tables) {
  std::string out;
  for_each_row(tables, [&](const json& row) {
    out += row.dump();
    out += '\n';
  });
  return out;
}

// --- lifecycle ----------------------------------------------------------------

std::unique_ptr<Store> Store::in_memory() { return std::unique_ptr<Store>(new Store()); }

std::unique_ptr<Store> Store::open(const fs::path& dir, StoreOptions options) {
  std::unique_ptr<Store> store(new Store());
  store->options_ = options;
  store->dir_ = dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  const fs::path snap = dir / kSnapshotFile;
  if (fs::exists(snap)) {
    std::ifstream in(snap, std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto contents = decode_snapshot(bytes);
    store->tables_ = std::move(contents.tables);
    store->sequence_ = contents.wal_sequence;
  }

  const fs::path wal = dir / kWalFile;
  std::uintmax_t good_bytes = 0;
  if (fs::exists(wal)) {
    std::ifstream in(wal, std::ios::binary);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    while (pos < text.size()) {
      const auto nl = text.find('\n', pos);
      if (nl == std::string::npos) break;  // torn tail
      const std::string_view line(text.data() + pos, nl - pos);
      const bool last = nl + 1 == text.size();
      const auto parts = split_tabs(line, 3);
      bool intact = parts.size() == 3 && parts[1].size() == 8;
      std::int64_t seq = 0;
      if (intact) {
        const std::string covered = std::string(parts[0]) + "\t" + std::string(parts[2]);
        intact = hex32(crc_of(covered)) == parts[1];
        if (intact) seq = parse_i64(parts[0]);
      }
      if (!intact) {
        if (last) break;
        throw Error(ErrorCode::CorruptLog, "damaged record before end of " + wal.string());
      }
      if (static_cast<std::uint64_t>(seq) > store->sequence_) {
        if (static_cast<std::uint64_t>(seq) != store->sequence_ + 1) {
          throw Error(ErrorCode::CorruptLog, "gap in log sequence at " + std::to_string(seq));
        }
        store->apply_record(std::string(parts[2]), false);
        store->sequence_ = static_cast<std::uint64_t>(seq);
      }
      pos = nl + 1;
      good_bytes = pos;
    }
    if (good_bytes != text.size()) fs::resize_file(wal, good_bytes);
  }

  store->wal_ = std::fopen(wal.c_str(), "ab");
  if (!store->wal_) {
    throw Error(ErrorCode::IoError, "cannot open " + wal.string() + ": " + std::strerror(errno));
  }
  return store;
}

Store::~Store() {
  if (wal_) std::fclose(wal_);
}

void Store::throw_if_crashed() const {
  if (crashed_) throw Error(ErrorCode::IoError, "store is down after a simulated crash");
}

void Store::append_log(const std::string& body) {
  const std::uint64_t seq = sequence_ + 1;
  appends_.fetch_add(1, std::memory_order_relaxed);
  if (!wal_) {
    sequence_ = seq;
    return;
  }
  const std::string covered = std::to_string(seq) + "\t" + body;
  const std::string line = std::to_string(seq) + "\t" + hex32(crc_of(covered)) + "\t" + body + "\n";

  auto write = [&](std::size_t n) {
    if (std::fwrite(line.data(), 1, n, wal_) != n || std::fflush(wal_) != 0) {
      throw Error(ErrorCode::IoError, "log write failed");
    }
  };
  if (options_.crash && options_.crash->at_sequence == seq) {
    crashed_ = true;
    switch (options_.crash->point) {
      case CrashPoint::BeforeWrite: break;
      case CrashPoint::TornWrite: write(line.size() / 2); break;
      case CrashPoint::AfterWrite: write(line.size()); break;
    }
    throw SimulatedCrash{};
  }
  write(line.size());
  if (options_.fsync) ::fsync(fileno(wal_));
  sequence_ = seq;
}

void Store::apply_record(const std::string& body, bool validate_only) {
  try {
    const auto parts = split_tabs(body, 5);
    const std::string_view kind = parts[0];
    if (kind == "PAY" && parts.size() == 5) {
      PaymentRecord r;
      r.recorded_at = Timestamp{parse_i64(parts[1])};
      const auto period = parse_period(parts[2]);
      if (!period) throw Error(ErrorCode::CorruptLog, "bad period");
      r.bill_period = *period;
      r.bill_generation = static_cast<std::uint32_t>(parse_i64(parts[3]));
      auto msg = protocol::decode(parts[4]);
      r.payment = std::get<protocol::PaymentMessage>(msg);
      check_payment(r);
      if (!validate_only) apply_payment(r);
      return;
    }
    const auto two = split_tabs(body, 3);
    if (kind == "REV" && two.size() == 3) {
      auto msg = protocol::decode(two[2]);
      const auto& reversal = std::get<protocol::PaymentMessage>(msg);
      const Timestamp at{parse_i64(two[1])};
      if (!apply_reversal(reversal, at, true)) throw Error(ErrorCode::CorruptLog, "unmatched reversal");
      if (!validate_only) apply_reversal(reversal, at, false);
      return;
    }
    const auto kv = split_tabs(body, 2);
    if (kv.size() != 2) throw Error(ErrorCode::CorruptLog, "unknown record");
    const json j = json::parse(kv[1]);
    if (kind == "ACAD") {
      const auto batch = codec::batch_from(j);
      apply_academic(batch, true);
      if (!validate_only) apply_academic(batch, false);
    } else if (kind == "TARIFF") {
      const auto book = codec::tariff_book_from(j);
      apply_tariffs(book, true);
      if (!validate_only) apply_tariffs(book, false);
    } else if (kind == "BILLS") {
      const auto changes = codec::bill_changes_from(j);
      check_bill_changes(changes);
      if (!validate_only) apply_bill_changes(changes);
    } else {
      throw Error(ErrorCode::CorruptLog, "unknown record kind");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptLog) throw;
    throw Error(ErrorCode::CorruptLog, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::CorruptLog, e.what());
  }
}

// --- reads ----------------------------------------------------------------------

std::vector<ledger::Bill> Store::get_unpaid_bills(const std::string& student_id,
                                                  std::optional<AcademicPeriod> period) const {
  std::shared_lock lock(mutex_);
  count_lookup();
  std::vector<ledger::Bill> out;
  const auto it = tables_.std_bill.find(student_id);
  if (it == tables_.std_bill.end()) return out;
  for (const auto& bill : it->second.bills) {
    if (bill.outstanding() && (!period || bill.period == *period)) out.push_back(bill);
  }
  return out;
}

std::vector<ledger::Bill> Store::bills_of(const std::string& student_id) const {
  std::shared_lock lock(mutex_);
  count_lookup();
  const auto it = tables_.std_bill.find(student_id);
  if (it == tables_.std_bill.end()) return {};
  return it->second.bills;
}

Store::AccountView Store::account_view(const std::string& student_id, const std::string& txkey) const {
  std::shared_lock lock(mutex_);
  count_lookup();
  AccountView view;
  const auto it = tables_.std_bill.find(student_id);
  if (it == tables_.std_bill.end()) return view;
  view.bills = it->second.bills;
  if (const auto p = it->second.payments.find(txkey); p != it->second.payments.end()) {
    view.payment = tables_.payment_trans[p->second];
  }
  return view;
}

bool Store::is_known_student(const std::string& student_id) const {
  std::shared_lock lock(mutex_);
  count_lookup();
  return tables_.known_students.contains(student_id);
}

std::optional<ledger::StudentEnrollment> Store::enrollment(const AcademicPeriod& period,
                                                           const std::string& student_id) const {
  std::shared_lock lock(mutex_);
  count_lookup();
  const auto it = tables_.student_active.find({period, student_id});
  if (it == tables_.student_active.end()) return std::nullopt;
  return it->second;
}

std::vector<ledger::StudentEnrollment> Store::students_in(const AcademicPeriod& period) const {
  std::shared_lock lock(mutex_);
  std::vector<ledger::StudentEnrollment> out;
  for (auto it = tables_.student_active.lower_bound({period, ""});
       it != tables_.student_active.end() && it->first.first == period; ++it) {
    out.push_back(it->second);
  }
  return out;
}

std::vector<ledger::CourseRegistration> Store::registrations_of(const AcademicPeriod& period,
                                                                const std::string& student_id) const {
  std::shared_lock lock(mutex_);
  count_lookup();
  std::vector<ledger::CourseRegistration> out;
  for (auto it = tables_.course_regis.lower_bound({period, student_id, ""});
       it != tables_.course_regis.end() && std::get<0>(it->first) == period &&
       std::get<1>(it->first) == student_id;
       ++it) {
    out.push_back(it->second);
  }
  return out;
}

std::vector<ledger::Scholarship> Store::scholarships_of(const AcademicPeriod& period,
                                                        const std::string& student_id) const {
  std::shared_lock lock(mutex_);
  count_lookup();
  std::vector<ledger::Scholarship> out;
  for (auto it = tables_.std_scholarship.lower_bound({period, student_id, ""});
       it != tables_.std_scholarship.end() && std::get<0>(it->first) == period &&
       std::get<1>(it->first) == student_id;
       ++it) {
    out.push_back(it->second);
  }
  return out;
}

std::optional<ledger::TariffBook> Store::tariff_book(const AcademicPeriod& period) const {
  std::shared_lock lock(mutex_);
  count_lookup();
  const auto it = tables_.tariffs.find(period);
  if (it == tables_.tariffs.end()) return std::nullopt;
  return it->second;
}

TableSet Store::snapshot_view() const {
  std::shared_lock lock(mutex_);
  return tables_;
}

std::string Store::dump() const {
  std::shared_lock lock(mutex_);
  return store::dump(tables_);
}

AccessStats Store::stats() const {
  return {lookups_.load(std::memory_order_relaxed), appends_.load(std::memory_order_relaxed)};
}

std::uint64_t Store::wal_sequence() const {
  std::shared_lock lock(mutex_);
  return sequence_;
}

// --- payments ------------------------------------------------------------------

void Store::check_payment(const PaymentRecord& record) const {
  const auto& p = record.payment;
  if (p.transaction_type != TransactionType::Payment) {
    throw Error(ErrorCode::InvalidArgument, "only PAYMENT messages are recorded");
  }
  const auto it = tables_.std_bill.find(p.student_id);
  if (it == tables_.std_bill.end()) throw Error(ErrorCode::BillNotFound, "no bills for " + p.student_id);
  const auto* bill = find_bill(it->second, record.bill_period, p.paycode, record.bill_generation);
  if (!bill || bill->superseded) {
    throw Error(ErrorCode::BillNotFound, std::string(to_string(p.paycode)) + " of " + p.student_id);
  }
  if (bill->paid_status) {
    throw Error(ErrorCode::BillAlreadyPaid, std::string(to_string(p.paycode)) + " of " + p.student_id);
  }
  if (bill->amount != p.amount) {
    throw Error(ErrorCode::InvalidArgument, "payment amount differs from the bill");
  }
  const auto tx = it->second.payments.find(transaction_key(p.bank_code, p.transaction_no));
  if (tx != it->second.payments.end() && !tables_.payment_trans[tx->second].reversed) {
    throw Error(ErrorCode::DuplicateTransaction, p.bank_code + "/" + p.transaction_no);
  }
}

void Store::apply_payment(const PaymentRecord& record) {
  const auto& p = record.payment;
  auto& account = tables_.std_bill.at(p.student_id);
  auto* bill = find_bill(account, record.bill_period, p.paycode, record.bill_generation);
  bill->paid_status = true;
  bill->datetime_paid = record.recorded_at;
  tables_.payment_trans.push_back(record);
  account.payments[transaction_key(p.bank_code, p.transaction_no)] = tables_.payment_trans.size() - 1;
}

void Store::commit_payment(const PaymentRecord& record) {
  std::unique_lock lock(mutex_);
  throw_if_crashed();
  count_lookup();
  check_payment(record);
  append_log(payment_body(record));
  apply_payment(record);
}

bool Store::apply_reversal(const protocol::PaymentMessage& r, Timestamp at, bool dry_run) {
  const auto it = tables_.std_bill.find(r.student_id);
  if (it == tables_.std_bill.end()) return false;
  auto& account = it->second;
  const auto tx = account.payments.find(transaction_key(r.bank_code, r.transaction_no));
  if (tx == account.payments.end()) return false;
  auto& record = tables_.payment_trans[tx->second];
  const auto& p = record.payment;
  if (record.reversed || p.student_id != r.student_id || p.paycode != r.paycode ||
      p.amount != r.amount) {
    return false;
  }
  auto* bill = find_bill(account, record.bill_period, p.paycode, record.bill_generation);
  if (!bill) return false;
  if (dry_run) return true;
  record.reversed = true;
  record.reversal = r;
  record.reversed_at = at;
  bill->paid_status = false;
  bill->datetime_paid.reset();
  return true;
}

bool Store::commit_reversal(const protocol::PaymentMessage& reversal, Timestamp at) {
  std::unique_lock lock(mutex_);
  throw_if_crashed();
  count_lookup();
  if (reversal.transaction_type != TransactionType::Reversal) {
    throw Error(ErrorCode::InvalidArgument, "commit_reversal needs a REVERSAL message");
  }
  if (!apply_reversal(reversal, at, true)) return false;
  append_log("REV\t" + std::to_string(at.ms) + "\t" + protocol::encode(reversal));
  apply_reversal(reversal, at, false);
  return true;
}

// --- bills -----------------------------------------------------------------------

void Store::check_bill_changes(const BillChangeSet& changes) const {
  const auto it = tables_.std_bill.find(changes.student_id);
  static const StudentAccount kEmpty;
  const StudentAccount& account = it == tables_.std_bill.end() ? kEmpty : it->second;

  std::set<std::tuple<AcademicPeriod, Paycode, std::uint32_t>> retiring;
  for (const auto& old : changes.superseded) {
    const auto* bill = find_bill(account, old.period, old.paycode, old.generation);
    if (!bill) throw Error(ErrorCode::BillNotFound, "superseded bill does not exist");
    const bool auto_settled = bill->paid_status && bill->amount.is_zero() && !bill->superseded;
    if (!bill->outstanding() && !auto_settled) {
      throw Error(ErrorCode::BillAlreadyPaid, "only outstanding or zero bills can be superseded");
    }
    retiring.emplace(old.period, old.paycode, old.generation);
  }
  std::set<std::pair<AcademicPeriod, Paycode>> open;
  for (const auto& bill : account.bills) {
    if (bill.outstanding() && !retiring.contains({bill.period, bill.paycode, bill.generation})) {
      open.emplace(bill.period, bill.paycode);
    }
  }
  std::set<std::tuple<AcademicPeriod, Paycode, std::uint32_t>> fresh;
  for (const auto& bill : changes.inserted) {
    if (bill.student_id != changes.student_id) {
      throw Error(ErrorCode::InvalidArgument, "bill belongs to another student");
    }
    if (bill.amount.is_negative()) throw Error(ErrorCode::InvalidArgument, "negative bill");
    if (bill.paid_status != bill.datetime_paid.has_value()) {
      throw Error(ErrorCode::InvalidArgument, "paid_status and datetime_paid disagree");
    }
    if (!paycode_fits_period(bill.paycode, bill.period)) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string(to_string(bill.paycode)) + " does not belong in " + to_string(bill.period));
    }
    if (find_bill(account, bill.period, bill.paycode, bill.generation) ||
        !fresh.emplace(bill.period, bill.paycode, bill.generation).second) {
      throw Error(ErrorCode::InvalidArgument, "bill generation already exists");
    }
    if (bill.outstanding() && !open.emplace(bill.period, bill.paycode).second) {
      throw Error(ErrorCode::InvalidArgument, "second unpaid " + std::string(to_string(bill.paycode)));
    }
  }
}

void Store::apply_bill_changes(const BillChangeSet& changes) {
  auto& account = tables_.std_bill[changes.student_id];
  for (const auto& old : changes.superseded) {
    find_bill(account, old.period, old.paycode, old.generation)->superseded = true;
  }
  for (const auto& bill : changes.inserted) account.bills.push_back(bill);
}

void Store::commit_bill_changes(const BillChangeSet& changes) {
  if (changes.empty()) return;
  std::unique_lock lock(mutex_);
  throw_if_crashed();
  count_lookup();
  check_bill_changes(changes);
  append_log("BILLS\t" + codec::to_json(changes).dump());
  apply_bill_changes(changes);
}

// --- academic data and tariffs ---------------------------------------------------

UpsertSummary Store::apply_academic(const AcademicBatch& batch, bool dry_run) {
  std::vector<std::string> diag;
  std::set<StudentKey> batch_students;
  for (std::size_t i = 0; i < batch.students.size(); ++i) {
    const auto& s = batch.students[i];
    const std::string where = "student #" + std::to_string(i + 1) + " (" + s.student_id + "): ";
    if (!s.period.valid()) diag.push_back(where + "year out of range");
    if (!protocol::is_wire_safe(s.student_id)) diag.push_back(where + "invalid student_id");
    if (!clean_text(s.name)) diag.push_back(where + "name is empty or holds a delimiter");
    if (s.bill1_credits < 0) diag.push_back(where + "negative bill1_credits");
    if (!batch_students.emplace(s.period, s.student_id).second) {
      diag.push_back(where + "duplicate student in " + to_string(s.period));
    }
  }
  auto known = [&](const AcademicPeriod& p, const std::string& id) {
    return batch_students.contains({p, id}) || tables_.student_active.contains({p, id});
  };
  std::set<RegistrationKey> batch_regs;
  for (std::size_t i = 0; i < batch.registrations.size(); ++i) {
    const auto& r = batch.registrations[i];
    const std::string where = "registration #" + std::to_string(i + 1) + " (" + r.student_id + "/" +
                              r.course_code + "): ";
    if (!r.period.valid()) diag.push_back(where + "year out of range");
    if (!protocol::is_wire_safe(r.course_code)) diag.push_back(where + "invalid course_code");
    if (r.credits < 1 || r.credits > 6) diag.push_back(where + "credits must be 1..6");
    if (!known(r.period, r.student_id)) diag.push_back(where + "unknown student");
    if (!batch_regs.emplace(r.period, r.student_id, r.course_code).second) {
      diag.push_back(where + "duplicate registration");
    }
  }
  std::set<ScholarshipKey> batch_schol;
  for (std::size_t i = 0; i < batch.scholarships.size(); ++i) {
    const auto& s = batch.scholarships[i];
    const std::string where = "scholarship #" + std::to_string(i + 1) + " (" + s.student_id + "/" +
                              s.scholarship_code + "): ";
    if (!s.period.valid()) diag.push_back(where + "year out of range");
    if (!clean_text(s.scholarship_code)) diag.push_back(where + "invalid scholarship_code");
    if (s.amount.is_negative()) diag.push_back(where + "negative amount");
    if (!known(s.period, s.student_id)) diag.push_back(where + "unknown student");
    if (!batch_schol.emplace(s.period, s.student_id, s.scholarship_code).second) {
      diag.push_back(where + "duplicate scholarship");
    }
  }
  if (!diag.empty()) throw ValidationError(std::move(diag));

  UpsertSummary summary;
  auto upsert = [&](auto& table, const auto& key, const auto& value) {
    const auto it = table.find(key);
    if (it == table.end()) {
      ++summary.inserted;
      if (!dry_run) table.emplace(key, value);
      return true;
    }
    if (it->second == value) {
      ++summary.unchanged;
    } else {
      ++summary.updated;
      if (!dry_run) it->second = value;
    }
    return false;
  };
  for (const auto& s : batch.students) {
    if (upsert(tables_.student_active, StudentKey{s.period, s.student_id}, s) && !dry_run) {
      ++tables_.known_students[s.student_id];
    }
  }
  for (const auto& r : batch.registrations) {
    upsert(tables_.course_regis, RegistrationKey{r.period, r.student_id, r.course_code}, r);
  }
  for (const auto& s : batch.scholarships) {
    upsert(tables_.std_scholarship, ScholarshipKey{s.period, s.student_id, s.scholarship_code}, s);
  }
  return summary;
}

UpsertSummary Store::upsert_academic(const AcademicBatch& batch) {
  std::unique_lock lock(mutex_);
  throw_if_crashed();
  const UpsertSummary summary = apply_academic(batch, true);
  if (summary.changes() == 0) return summary;
  append_log("ACAD\t" + codec::to_json(batch).dump());
  apply_academic(batch, false);
  return summary;
}

bool Store::apply_tariffs(const ledger::TariffBook& book, bool dry_run) {
  std::vector<std::string> diag;
  if (!book.period.valid()) diag.push_back("tariff book: year out of range");
  for (const auto& [id, tariff] : book.general) {
    if (tariff.amount.is_negative()) diag.push_back(std::string(to_string(id)) + ": negative amount");
  }
  for (const auto& [code, fees] : book.course) {
    if (code != fees.course_code || !protocol::is_wire_safe(code)) {
      diag.push_back("course tariff " + code + ": invalid course_code");
    }
    for (const auto* fee : {&fees.lab, &fees.studio, &fees.assist, &fees.tutor}) {
      if (!*fee) continue;
      if ((*fee)->amount.is_negative()) diag.push_back("course tariff " + code + ": negative amount");
      if (!clean_text((*fee)->code)) diag.push_back("course tariff " + code + ": empty fee code");
    }
  }
  if (!diag.empty()) throw ValidationError(std::move(diag));
  const auto it = tables_.tariffs.find(book.period);
  const bool changed = it == tables_.tariffs.end() || !(it->second == book);
  if (!dry_run && changed) tables_.tariffs[book.period] = book;
  return changed;
}

bool Store::replace_tariffs(const ledger::TariffBook& book) {
  std::unique_lock lock(mutex_);
  throw_if_crashed();
  if (!apply_tariffs(book, true)) return false;
  append_log("TARIFF\t" + codec::to_json(book).dump());
  apply_tariffs(book, false);
  return true;
}

void Store::checkpoint() {
  std::unique_lock lock(mutex_);
  throw_if_crashed();
  if (!dir_) return;
  const auto bytes = encode_snapshot(tables_, sequence_);
  const fs::path tmp = *dir_ / "snapshot.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
  }
  fs::rename(tmp, *dir_ / kSnapshotFile);
  // Records at or below the snapshot sequence are skipped on replay, so a
  // crash before this truncation is harmless.
  std::fclose(wal_);
  wal_ = std::fopen((*dir_ / kWalFile).c_str(), "wb");
  if (!wal_) throw Error(ErrorCode::IoError, "cannot reset log");
}

}  // namespace tuition::store
