#pragma once

#include <fstream>
#include <string>

#include "trisym/mode.hpp"
#include "trisym/types.hpp"

namespace trisym {

inline constexpr const char* kTraceCsvHeader =
    "t,reU1,imU1,reU2,imU2,reU3,imU3,E,cancel_resid,keiyaku_resid,err_est";

// One row per record; numbers use shortest round-trip formatting so files are
// reproducible byte for byte.
inline void write_trace_csv(const std::string& path, const EnergyTrace& tr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << kTraceCsvHeader << "\n";
  for (std::size_t k = 0; k < tr.size(); ++k) {
    out << to_shortest_string(tr.t[k]);
    for (int i = 0; i < 3; ++i)
      out << ',' << to_shortest_string(tr.u[k][i].real()) << ','
          << to_shortest_string(tr.u[k][i].imag());
    out << ',' << to_shortest_string(tr.e[k]) << ','
        << to_shortest_string(tr.cancel_resid[k]) << ','
        << to_shortest_string(tr.keiyaku_resid[k]) << ','
        << to_shortest_string(tr.err_pt[k]) << "\n";
  }
}

}  // namespace trisym
