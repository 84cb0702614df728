#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ergodeq::csv {

inline constexpr const char* kBlocks = "k,beta,log2_p,p,q,q_mode,t,t_mode";
inline constexpr const char* kAverages = "index,lo,hi,direction,tag";
inline constexpr const char* kSpectrum = "j,eigenvalue";
inline constexpr const char* kHistogram = "bin_lo,bin_hi,mass";
inline constexpr const char* kMoments = "N,degree,dk,dktilde,gap";
inline constexpr const char* kExponents = "E,Lbar_plus,Lunder_plus,Lbar_minus,Lunder_minus,s_max";
inline constexpr const char* kShells = "k,N_k,epsilon,parity";
inline constexpr const char* kOscillation = "k,N_k,samples,violations,fraction,wilson_upper,threshold,pass";
inline constexpr const char* kCounterexample = "l,measure,a_l,s_l";
inline constexpr const char* kSpatialMoments = "degree,estimate,std_error";
inline constexpr const char* kLimitScan = "N,value,tail_min,tail_max";
inline constexpr const char* kHopf = "N,epsilon,exceed_fraction,mean_average";

// Shortest round-trip representation of a double.
std::string num(double x);

void metadata(std::ostream& os, const std::vector<std::string>& lines);

}  // namespace ergodeq::csv
