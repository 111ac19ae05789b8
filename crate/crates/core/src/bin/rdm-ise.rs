fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RDM_ISE_LOG", "warn")).init();
    std::process::exit(rdm_ise::cli::main_with_args(std::env::args_os()));
}
