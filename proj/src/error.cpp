#include "mispro/error.hpp"

namespace mispro {

void throw_usage(const std::string& what) { throw Error(ErrorKind::Usage, what); }
void throw_data(const std::string& what) { throw Error(ErrorKind::Data, what); }
void throw_numerical(const std::string& what) { throw Error(ErrorKind::Numerical, what); }

}  // namespace mispro
