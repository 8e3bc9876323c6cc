/* Freestanding crypto primitives for the AEAD transport: SHA-256, HMAC,
 * HKDF (single-block expand), ChaCha20, Poly1305, and the combined AEAD
 * construction (RFC 8439, no associated data). */
#ifndef WATM_CRYPTO_H
#define WATM_CRYPTO_H

#include <stddef.h>
#include <stdint.h>

typedef struct {
    uint32_t state[8];
    uint64_t length;
    uint8_t buffer[64];
    uint32_t buffered;
} sha256_ctx;

void sha256_init(sha256_ctx *ctx);
void sha256_update(sha256_ctx *ctx, const uint8_t *data, size_t len);
void sha256_final(sha256_ctx *ctx, uint8_t out[32]);

void hmac_sha256(const uint8_t *key, size_t key_len, const uint8_t *msg, size_t msg_len,
                 uint8_t out[32]);

/* HKDF-SHA256 with a 32-byte output (single expand block). */
void hkdf_sha256_32(const uint8_t *salt, size_t salt_len, const uint8_t *ikm, size_t ikm_len,
                    const uint8_t *info, size_t info_len, uint8_t out[32]);

/* out = ciphertext || 16-byte tag (cap must be len + 16). */
void chacha20poly1305_seal(const uint8_t key[32], const uint8_t nonce[12], const uint8_t *plain,
                           size_t len, uint8_t *out);

/* in = ciphertext || tag (in_len >= 16); returns 0 and writes in_len - 16
 * plaintext bytes on success, -1 on tag mismatch (out untouched then). */
int chacha20poly1305_open(const uint8_t key[32], const uint8_t nonce[12], const uint8_t *in,
                          size_t in_len, uint8_t *out);

#endif /* WATM_CRYPTO_H */
