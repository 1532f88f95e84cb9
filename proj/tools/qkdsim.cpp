// qkdsim - command-line front end.
//
//   qkdsim session --config no_eve.json [--seed N] [--out DIR]
//   qkdsim tomo    --config partial_eve.json
//   qkdsim bell    --config bell.json
//   qkdsim run     --config any.json         (dispatches on "kind")
//   qkdsim otp encrypt --key-file out/transcript.json --text "QKD"
//   qkdsim otp decrypt --key-hex ab12... --hex 5f3c --as-text

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qkd/cli.hpp"

namespace {

struct ConfigFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
    cmd->add_option("--config", f.config, "run config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "seed, overrides the config file");
    cmd->add_option("--out", f.out, "output directory, overrides the config file");
}

qkd::cli::RunConfig load(const ConfigFlags& f) {
    auto rc = qkd::cli::load_run_config(f.config);
    if (f.seed) rc.session.seed = *f.seed;
    if (f.out) rc.out_dir = *f.out;
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entanglement-based BB84 simulator with tomography and one-time pad"};
    app.require_subcommand(1);

    ConfigFlags flags;
    auto* session = app.add_subcommand("session", "run a key-distribution session");
    auto* tomo = app.add_subcommand("tomo", "simulate and reconstruct a tomography experiment");
    auto* bell = app.add_subcommand("bell", "CHSH correlators and S");
    auto* run = app.add_subcommand("run", "run the experiment named by the config's kind");
    for (auto* cmd : {session, tomo, bell, run}) add_config_flags(cmd, flags);

    auto* otp = app.add_subcommand("otp", "one-time pad with a session key");
    std::string direction;
    std::string key_hex, key_file, text, hex;
    qkd::cli::OtpArgs otp_args;
    otp->add_option("direction", direction, "encrypt or decrypt")
        ->required()
        ->check(CLI::IsMember({"encrypt", "decrypt"}));
    auto* key_hex_opt = otp->add_option("--key-hex", key_hex, "key as hex");
    auto* key_file_opt = otp->add_option("--key-file", key_file, "transcript JSON or hex file")
                             ->check(CLI::ExistingFile);
    key_hex_opt->excludes(key_file_opt);
    otp->add_option("--offset", otp_args.offset, "first key bit to use");
    auto* text_opt = otp->add_option("--text", text, "payload as text (8 bits per byte, MSB first)");
    auto* hex_opt = otp->add_option("--hex", hex, "payload as hex");
    text_opt->excludes(hex_opt);
    otp->add_flag("--as-text", otp_args.as_text, "print the output as text instead of hex");

    CLI11_PARSE(app, argc, argv);

    try {
        if (otp->parsed()) {
            if (key_hex_opt->count() + key_file_opt->count() != 1)
                throw qkd::cli::ConfigError("otp: give --key-hex or --key-file");
            if (text_opt->count() + hex_opt->count() != 1) throw qkd::cli::ConfigError("otp: give --text or --hex");
            otp_args.decrypt = direction == "decrypt";
            otp_args.key = key_file_opt->count() ? qkd::cli::load_key_file(key_file) : qkd::BitString::from_hex(key_hex);
            otp_args.payload = text_opt->count() ? qkd::BitString::from_text(text) : qkd::BitString::from_hex(hex);
            return qkd::cli::cmd_otp(otp_args);
        }
        auto rc = load(flags);
        if (session->parsed()) return qkd::cli::cmd_session(rc);
        if (tomo->parsed()) return qkd::cli::cmd_tomo(rc);
        if (bell->parsed()) return qkd::cli::cmd_bell(rc);
        return qkd::cli::run(rc);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qkd::cli::kUsage;
    }
}
