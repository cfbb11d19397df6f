#pragma once

#include <filesystem>
#include <vector>

#include "mtdsim/mtdsim.hpp"

inline std::filesystem::path fixtures_dir() { return std::filesystem::path(MTDSIM_FIXTURES_DIR); }
inline std::filesystem::path oracle_dir() { return std::filesystem::path(MTDSIM_ORACLE_DIR); }

// The four bundled service reports for the homogeneous (all-Java) deployment,
// in gateway, customers, vets, visits order.
inline std::vector<mtdsim::scan_report> petclinic_reports() {
    const auto base = fixtures_dir() / "petclinic";
    return {
        mtdsim::load_scan_report(base / "api-gateway.json"),
        mtdsim::load_scan_report(base / "customers-service.json"),
        mtdsim::load_scan_report(base / "vets-service.json"),
        mtdsim::load_scan_report(base / "visits-service.json"),
    };
}

// Deployment after the 3:4 variant switch: gateway, customers and vets run
// replacement builds, visits stays on Java.
inline std::vector<mtdsim::scan_report> petclinic_diversified_reports() {
    const auto base = fixtures_dir() / "petclinic";
    return {
        mtdsim::load_scan_report(base / "diversified" / "api-gateway.json"),
        mtdsim::load_scan_report(base / "diversified" / "customers-service.json"),
        mtdsim::load_scan_report(base / "diversified" / "vets-service.json"),
        mtdsim::load_scan_report(base / "visits-service.json"),
    };
}
