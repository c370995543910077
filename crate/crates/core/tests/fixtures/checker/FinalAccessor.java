public class FinalAccessor {
    private static final FinalAccessor INSTANCE;

    static {
        INSTANCE = new FinalAccessor();
    }

    private FinalAccessor() {
    }

    public static final FinalAccessor get() {
        return INSTANCE;
    }
}
