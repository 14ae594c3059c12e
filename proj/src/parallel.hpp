#pragma once

#define BILLSPEC_PRAGMA(x) _Pragma(#x)

#if defined(BILLSPEC_HAVE_OPENMP)
#define BILLSPEC_PARALLEL_FOR(cond) BILLSPEC_PRAGMA(omp parallel for schedule(dynamic) if (cond))
#else
#define BILLSPEC_PARALLEL_FOR(cond)
#endif
