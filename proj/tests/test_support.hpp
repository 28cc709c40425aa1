#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "confaudit/cohort.hpp"

namespace confaudit::testing {

inline StudyRecord make_record(std::string patient, std::string study, double age, Sex sex, Race race,
                               std::size_t dim = 2) {
    StudyRecord r;
    r.patient_id = std::move(patient);
    r.study_id = std::move(study);
    r.age = age;
    r.sex = sex;
    r.race = race;
    r.features.assign(dim, 0.0);
    return r;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("confaudit_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace confaudit::testing
