/* Compiled as C99 to prove the public header needs no C++ compiler. */
#include <capillary/capillary.h>

#include <stddef.h>

int capi_header_compiles_as_c(void) {
  const char* version = cap_version();
  const char* name = cap_status_name(CAP_OK);
  cap_string_free(NULL);
  return version != NULL && name != NULL;
}
