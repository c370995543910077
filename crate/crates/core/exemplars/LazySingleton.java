public class Logger {
    private static Logger instance;

    private final StringBuilder buffer = new StringBuilder();

    private Logger() {
    }

    public static synchronized Logger getInstance() {
        if (instance == null) {
            instance = new Logger();
        }
        return instance;
    }

    public void log(String message) {
        buffer.append(message).append('\n');
    }

    public String contents() {
        return buffer.toString();
    }
}
