#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tuition/ledger.hpp"

// Delimited academic and tariff files. Every file starts with a header row
// naming the columns in order; a blank bill1_credits falls back to the
// degree default. Problems are collected per row and thrown together as a
// ValidationError.
namespace tuition::ingest {

inline const std::vector<std::string> kStudentColumns = {
    "year", "semester", "student_ID", "pay_credits", "bill1_credits", "name", "degree_level", "dispensation"};
inline const std::vector<std::string> kRegistrationColumns = {
    "year",          "semester",      "student_ID",   "name",         "course_code",   "credits",
    "status_lab",    "status_studio", "status_asist", "status_tutor", "trans_datetime"};
inline const std::vector<std::string> kScholarshipColumns = {
    "year", "semester", "student_ID", "name", "scholarship_code", "amount"};
inline const std::vector<std::string> kGeneralTariffColumns = {
    "year", "semester", "tariff_ID", "tariff_description", "amount"};
inline const std::vector<std::string> kCourseTariffColumns = {
    "year",          "semester",      "course_code", "code_lab",    "amount_lab",  "code_studio",
    "amount_studio", "code_assist",   "amount_assist", "code_tutor", "amount_tutor"};

std::vector<ledger::StudentEnrollment> parse_students(std::string_view text, std::string_view source = "students",
                                                      char delimiter = ',');
std::vector<ledger::CourseRegistration> parse_registrations(std::string_view text,
                                                            std::string_view source = "registrations",
                                                            char delimiter = ',');
std::vector<ledger::Scholarship> parse_scholarships(std::string_view text, std::string_view source = "scholarships",
                                                    char delimiter = ',');
// One book per period found in either file.
std::vector<ledger::TariffBook> parse_tariffs(std::string_view general_text, std::string_view course_text,
                                              char delimiter = ',');

std::string read_text_file(const std::filesystem::path& path);

}  // namespace tuition::ingest
